//! Exhaustive grid search against the complementarity solver on markets small enough to
//! enumerate.

mod common;

use common::agreement::{agreement, grid};
use nashgrid_core::model::MarketConfig;
use nashgrid_core::{brute_force_nash, solve_equilibrium, PlayerWeights, ScenarioSet, SolveOptions};

fn check(name: &str, inst: (MarketConfig, ScenarioSet, PlayerWeights), g: &nashgrid_core::OracleGrid) -> f64 {
    agreement(name, &inst, g).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn tiny_instance_matches_oracle() {
    check("tiny", common::tiny(), &grid(0.05, 20.0, 60.0));
}

#[test]
fn tiny_oracle_converges_to_the_analytic_point() {
    let (cfg, set, w) = common::tiny();
    let exact = common::tiny_analytic();
    let err = |step: f64| {
        let or = brute_force_nash(&cfg, &set, &w, &grid(step, 20.0, 60.0)).unwrap();
        (or.alpha[0][0] - exact.alpha).abs().max((or.epsilon[0][0] - exact.epsilon).abs())
    };
    let coarse = err(0.1);
    let fine = err(0.05);
    assert!(coarse <= 0.1 + 1e-9, "coarse error {coarse}");
    assert!(fine <= 0.05 + 1e-9, "fine error {fine}");
    assert!(fine <= coarse + 1e-12, "refinement increased error: {coarse} -> {fine}");
}

#[test]
fn symmetric_duopoly_matches_oracle_and_is_symmetric() {
    let inst = common::symmetric_duopoly();
    let g = grid(0.05, 30.0, 62.0);
    check("duopoly", inst.clone(), &g);
    let (cfg, set, w) = inst;
    let or = brute_force_nash(&cfg, &set, &w, &g).unwrap();
    assert_eq!(or.alpha[0], or.alpha[1]);
    assert_eq!(or.epsilon[0][0], or.epsilon[0][1]);
    for s in 0..2 {
        assert!((or.q_dp[0][s] - or.q_dp[1][s]).abs() < 1e-9);
    }
}

#[test]
fn congested_two_area_matches_oracle() {
    let (cfg, set, w) = common::two_area_congested();
    let sol = solve_equilibrium(&cfg, &set, &w, &SolveOptions::default()).unwrap();
    assert!((sol.flows[0].flows[0] - 100.0).abs() < 1e-6, "line must bind: {}", sol.flows[0].flows[0]);
    assert!(sol.duals.line_upper[0][0] > 1e-3);
    check("two-area", (cfg, set, w), &grid(0.05, 15.0, 65.0));
}

#[test]
fn oversized_instances_are_rejected() {
    let (cfg, set, w) = common::tiny();
    let mut big = cfg.clone();
    for k in 0..3 {
        big.producers.push(common::producer(&format!("X{k}"), 0, 20.0, 0.01, 1e6, 0.5));
    }
    let w_big = PlayerWeights::uniform(&big, 1);
    assert!(brute_force_nash(&big, &set, &w_big, &grid(0.05, 20.0, 60.0)).is_err());
    assert!(brute_force_nash(&cfg, &set, &w, &grid(1e-6, 0.0, 100.0)).is_err());
}
