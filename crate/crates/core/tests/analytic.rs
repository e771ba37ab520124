//! The single-producer, single-supplier, single-area market against its closed-form
//! equilibrium.

mod common;

use std::time::Instant;

use nashgrid_core::equilibrium::EquilibriumError;
use nashgrid_core::mcp::Mcp;
use nashgrid_core::{
    assemble_mcp, kkt_residual, solve_equilibrium, verify_invariants,
    verify_no_profitable_deviation, DeviationGrid, EquilibriumSolution, SolveOptions,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn solved() -> EquilibriumSolution {
    let (cfg, set, w) = common::tiny();
    solve_equilibrium(&cfg, &set, &w, &SolveOptions::default()).unwrap()
}

/// The solver's document with every primal overwritten by the closed-form values.
fn analytic_solution() -> EquilibriumSolution {
    let exact = common::tiny_analytic();
    let mut sol = solved();
    sol.producers[0].alpha_row[0] = exact.alpha;
    sol.producers[0].q_dp[0] = exact.q;
    sol.suppliers[0].epsilon_row[0] = exact.epsilon;
    sol.suppliers[0].q_dc[0] = exact.q + common::TINY_WIND;
    sol.forward.quantity[0][0] = exact.contract;
    sol.forward.price[0][0] = exact.contract_price;
    sol.prices[0].hub_price = exact.price;
    sol.prices[0].area_prices[0] = exact.price;
    sol
}

#[test]
fn frozen_closed_form_values() {
    // q = (60 − 20 − 2·0.006·500)/(3·0.006 + 0.008) = 34/0.026
    let e = common::tiny_analytic();
    assert!((e.q - 1307.692307692).abs() < 1e-6);
    assert!((e.contract - 774.725274725).abs() < 1e-6);
    assert!((e.price - 44.505494505).abs() < 1e-6);
    assert!((e.contract_price - 49.153846154).abs() < 1e-6);
}

#[test]
fn solver_matches_closed_form() {
    let (cfg, set, w) = common::tiny();
    let start = Instant::now();
    let sol = solve_equilibrium(&cfg, &set, &w, &SolveOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0);
    let e = common::tiny_analytic();
    assert!(rel(sol.producers[0].q_dp[0], e.q) < 1e-6);
    assert!(rel(sol.forward.quantity[0][0], e.contract) < 1e-6);
    assert!(rel(sol.forward.price[0][0], e.contract_price) < 1e-6);
    assert!(rel(sol.prices[0].area_prices[0], e.price) < 1e-6);
    assert!(rel(sol.prices[0].hub_price, e.price) < 1e-6);
    assert!(rel(sol.producers[0].alpha_row[0], e.alpha) < 1e-6);
    assert!(rel(sol.suppliers[0].epsilon_row[0], e.epsilon) < 1e-6);
    assert!(rel(sol.suppliers[0].q_dc[0], e.q + common::TINY_WIND) < 1e-6);
    assert!(sol.duals.capacity[0][0].abs() < 1e-9);
    assert!(sol.duals.contract[0][0].abs() < 1e-9);
    assert!(sol.diagnostics.kkt_residual <= 1e-8);
}

#[test]
fn system_has_seven_variables() {
    let (cfg, set, w) = common::tiny();
    let sys = assemble_mcp(&cfg, &set, &w).unwrap();
    // α, ε, m, then q, κ, λ_hub, γ
    assert_eq!(sys.dim(), 7);
}

#[test]
fn kkt_residual_vanishes_at_the_closed_form() {
    let (cfg, set, w) = common::tiny();
    let sys = assemble_mcp(&cfg, &set, &w).unwrap();
    let report = kkt_residual(&analytic_solution(), &sys).unwrap();
    assert!(report.overall <= 1e-12, "{report:?}");
}

#[test]
fn perturbing_output_moves_dispatch_residual_by_its_coefficient() {
    let (cfg, set, w) = common::tiny();
    let sys = assemble_mcp(&cfg, &set, &w).unwrap();
    let mut sol = analytic_solution();
    sol.producers[0].q_dp[0] += 1.0;
    let report = kkt_residual(&sol, &sys).unwrap();
    // The hub price is its own variable, so ∂(dispatch row)/∂q = D + b with D = d here.
    let coefficient = common::TINY_D + common::TINY_B;
    assert!(report.blocks["producer_dispatch"] >= coefficient - 1e-12);
    assert!(report.overall >= coefficient - 1e-12);
}

#[test]
fn zero_point_is_not_stationary() {
    let (cfg, set, w) = common::tiny();
    let sys = assemble_mcp(&cfg, &set, &w).unwrap();
    let zero = vec![0.0; sys.dim()];
    assert!(sys.report(&zero).overall > 0.0);
}

#[test]
fn no_profitable_deviation_at_the_closed_form() {
    let (cfg, set, w) = common::tiny();
    let rep = verify_no_profitable_deviation(&analytic_solution(), &cfg, &set, &w, &DeviationGrid::default()).unwrap();
    assert!(rep.max_relative_improvement <= 1e-8, "{}", rep.to_table());
}

#[test]
fn shifted_bid_is_a_profitable_deviation() {
    let (cfg, set, w) = common::tiny();
    let mut sol = analytic_solution();
    sol.producers[0].alpha_row[0] += 5.0;
    let rep = verify_no_profitable_deviation(&sol, &cfg, &set, &w, &DeviationGrid::default()).unwrap();
    assert!(rep.players[0].relative_improvement > 0.0, "{}", rep.to_table());
}

#[test]
fn invariants_hold_and_edits_are_named() {
    let (cfg, ..) = common::tiny();
    let sol = solved();
    assert!(verify_invariants(&sol, &cfg).is_empty());

    let mut edited = sol.clone();
    edited.prices[0].area_prices[0] += 1.0;
    let v = verify_invariants(&edited, &cfg);
    assert!(v.iter().any(|m| m.starts_with("price identity")), "{v:?}");

    let mut stale = cfg.clone();
    stale.suppliers[0].c += 1.0;
    let v = verify_invariants(&sol, &stale);
    assert!(v.len() == 1 && v[0].contains("config hash mismatch"), "{v:?}");
}

#[test]
fn document_round_trip_is_exact_and_deterministic() {
    let a = solved();
    let b = solved();
    assert_eq!(a.to_json(), b.to_json());
    let back = EquilibriumSolution::from_json(&a.to_json()).unwrap();
    assert_eq!(back.to_json(), a.to_json());
}

#[test]
fn failed_polish_reports_the_trace() {
    let (cfg, set, w) = common::tiny();
    let opts = SolveOptions {
        max_cycles: 2,
        newton_max_iter: 0,
        ..SolveOptions::default()
    };
    match solve_equilibrium(&cfg, &set, &w, &opts) {
        Err(EquilibriumError::NonConvergence { cycles, trace, .. }) => {
            assert_eq!(cycles, 2);
            assert_eq!(trace.len(), 2);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn invalid_damping_is_rejected() {
    let (cfg, set, w) = common::tiny();
    let opts = SolveOptions {
        damping: 0.0,
        ..SolveOptions::default()
    };
    assert!(matches!(solve_equilibrium(&cfg, &set, &w, &opts), Err(EquilibriumError::Dimension(_))));
}
