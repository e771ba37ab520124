//! Randomized invariant suites, shared by the property tests and the acceptance run.

use super::{area, market, producer, supplier};
use nashgrid_core::model::Line;
use nashgrid_core::uncertainty::ConcernWeights;
use nashgrid_core::{
    assemble_mcp, bundled_pjm5_case, clear_contract, clear_day_ahead, concern_weights, dc_flow,
    kkt_residual, solve_equilibrium, verify_invariants, MarketConfig, Network, PlayerWeights, Role,
    ScenarioSet, SolveOptions,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 1000;

pub type Suite = fn() -> Result<(), String>;

/// Every suite with its name.
pub const ALL: [(&str, Suite); 9] = [
    ("contract price on both bid curves", contract_price_on_both_curves),
    ("contract price between intercepts", contract_price_between_intercepts),
    ("intercept shift moves only price", intercept_shift_moves_only_price),
    ("concern weights normalized", concern_weights_normalized),
    ("concern weights ordered by role", concern_weights_ordered_by_role),
    ("stronger concern dominates", stronger_concern_dominates),
    ("dc flow linear and antisymmetric", dc_flow_linear_and_antisymmetric),
    ("more wind never raises prices", more_wind_never_raises_prices),
    ("solved markets satisfy complementarity", solved_markets_satisfy_complementarity),
];

fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    // Fixed seed keeps every run identical.
    let mut runner = TestRunner::new_with_rng(
        Config {
            failure_persistence: None,
            ..Config::with_cases(CASES)
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn cumulative(w: &ConcernWeights) -> Vec<f64> {
    w.by_rank
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn slopes() -> impl Strategy<Value = (f64, f64)> {
    (1e-4..0.1f64, 1e-4..0.1f64)
}

pub fn contract_price_on_both_curves() -> Result<(), String> {
    run((-50.0..150.0f64, -50.0..150.0f64, slopes()), |(alpha, epsilon, (b, d))| {
        let (q, f) = clear_contract(alpha, epsilon, b, d).unwrap();
        prop_assert!(close(f, alpha + b * q, 1e-10));
        prop_assert!(close(f, epsilon - d * q, 1e-10));
        Ok(())
    })
}

pub fn contract_price_between_intercepts() -> Result<(), String> {
    run((0.0..100.0f64, 0.0..100.0f64, slopes()), |(alpha, gap, (b, d))| {
        let epsilon = alpha + gap;
        let (q, f) = clear_contract(alpha, epsilon, b, d).unwrap();
        prop_assert!(q >= 0.0);
        prop_assert!(f >= alpha - 1e-9 && f <= epsilon + 1e-9);
        Ok(())
    })
}

pub fn intercept_shift_moves_only_price() -> Result<(), String> {
    run(
        (0.0..100.0f64, 0.0..100.0f64, -50.0..50.0f64, slopes()),
        |(alpha, epsilon, shift, (b, d))| {
            let (q0, f0) = clear_contract(alpha, epsilon, b, d).unwrap();
            let (q1, f1) = clear_contract(alpha + shift, epsilon + shift, b, d).unwrap();
            prop_assert!(close(q0, q1, 1e-9));
            prop_assert!(close(f1, f0 + shift, 1e-9));
            Ok(())
        },
    )
}

pub fn concern_weights_normalized() -> Result<(), String> {
    run((0.01..5.0f64, 1usize..40), |(beta, n)| {
        for role in [Role::Producer, Role::Supplier] {
            let w = concern_weights(beta, n, role).unwrap();
            prop_assert_eq!(w.by_rank.len(), n);
            prop_assert!(w.by_rank.iter().all(|&x| x >= 0.0));
            prop_assert!(close(w.by_rank.iter().sum::<f64>(), 1.0, 1e-12));
        }
        Ok(())
    })
}

pub fn concern_weights_ordered_by_role() -> Result<(), String> {
    run((0.01..5.0f64, 2usize..40), |(beta, n)| {
        let s = concern_weights(beta, n, Role::Supplier).unwrap();
        let p = concern_weights(beta, n, Role::Producer).unwrap();
        // Suppliers fear low wind, producers fear high wind.
        prop_assert!(s.by_rank.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(p.by_rank.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..n {
            prop_assert!(close(s.by_rank[k], p.by_rank[n - 1 - k], 1e-12));
        }
        Ok(())
    })
}

pub fn stronger_concern_dominates() -> Result<(), String> {
    run((0.01..3.0f64, 0.01..2.0f64, 2usize..30), |(beta, extra, n)| {
        let weak = cumulative(&concern_weights(beta, n, Role::Supplier).unwrap());
        let strong = cumulative(&concern_weights(beta + extra, n, Role::Supplier).unwrap());
        for k in 0..n {
            prop_assert!(strong[k] >= weak[k] - 1e-12);
        }
        Ok(())
    })
}

pub fn dc_flow_linear_and_antisymmetric() -> Result<(), String> {
    let cfg = bundled_pjm5_case();
    let injection = prop::collection::vec(-500.0..500.0f64, cfg.areas.len() - 1);
    run(
        (injection.clone(), injection, -3.0..3.0f64, -3.0..3.0f64),
        |(x, y, s, t)| {
            let balance = |v: &[f64]| {
                let mut out = v.to_vec();
                out.push(-v.iter().sum::<f64>());
                out
            };
            let (x, y) = (balance(&x), balance(&y));
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| s * a + t * b).collect();
            let fx = dc_flow(&x, &cfg).unwrap().flows;
            let fy = dc_flow(&y, &cfg).unwrap().flows;
            let fz = dc_flow(&z, &cfg).unwrap().flows;
            for l in 0..fz.len() {
                prop_assert!((fz[l] - (s * fx[l] + t * fy[l])).abs() <= 1e-8 * (1.0 + fz[l].abs()));
            }
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let fneg = dc_flow(&neg, &cfg).unwrap().flows;
            for l in 0..fx.len() {
                prop_assert!((fneg[l] + fx[l]).abs() <= 1e-9 * (1.0 + fx[l].abs()));
            }
            Ok(())
        },
    )
}

pub fn more_wind_never_raises_prices() -> Result<(), String> {
    run(
        (
            prop::collection::vec(0.0..3000.0f64, 2),
            0.0..1000.0f64,
            0usize..2,
            10.0..500.0f64,
        ),
        |(supply, extra, into, limit)| {
            let cfg = two_area_market(12.0, 0.01, 2000.0, 55.0, 0.008, 65.0, 0.006, limit);
            let net = Network::new(&cfg).unwrap();
            let (c, d) = ([55.0, 65.0], [0.008, 0.006]);
            let base = clear_day_ahead(&net, 0, &supply, &[0.0; 2], &c, &d).unwrap();
            let mut more = supply.clone();
            more[into] += extra;
            let windy = clear_day_ahead(&net, 0, &more, &[0.0; 2], &c, &d).unwrap();
            prop_assert!(windy.prices.hub_price <= base.prices.hub_price + 1e-7);
            for k in 0..2 {
                prop_assert!(windy.prices.area_prices[k] <= base.prices.area_prices[k] + 1e-7);
            }
            Ok(())
        },
    )
}

/// One producer and a supplier in each of two areas joined by one line.
#[allow(clippy::too_many_arguments)]
pub fn two_area_market(a: f64, b: f64, q_max: f64, c1: f64, d1: f64, c2: f64, d2: f64, limit: f64) -> MarketConfig {
    market(
        "random",
        vec![area("A"), area("B")],
        vec![producer("P1", 0, a, b, q_max, 0.5)],
        vec![supplier("C1", 0, c1, d1, 0.4), supplier("C2", 1, c2, d2, 0.8)],
        vec![Line {
            from: 0,
            to: 1,
            susceptance: 1000.0,
            t_max: limit,
            t_min: -limit,
        }],
        2,
    )
}

pub fn solved_markets_satisfy_complementarity() -> Result<(), String> {
    let producer_side = (10.0..25.0f64, 0.005..0.02f64, 200.0..3000.0f64);
    let demand = (45.0..70.0f64, 0.004..0.01f64, 45.0..70.0f64, 0.004..0.01f64);
    let network = (20.0..400.0f64, 0.0..200.0f64, 0.0..400.0f64);
    run(
        (producer_side, demand, network),
        |((a, b, q_max), (c1, d1, c2, d2), (limit, w_low, w_gap))| {
            let cfg = two_area_market(a, b, q_max, c1, d1, c2, d2, limit);
            let set = ScenarioSet::from_outputs(vec![vec![w_low, 0.0], vec![w_low + w_gap, 0.0]]);
            let weights = PlayerWeights::for_config(&cfg, &set).unwrap();
            let sol = solve_equilibrium(&cfg, &set, &weights, &SolveOptions::default())
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let issues = verify_invariants(&sol, &cfg);
            prop_assert!(issues.is_empty(), "{:?}", issues);
            let system = assemble_mcp(&cfg, &set, &weights).unwrap();
            let kkt = kkt_residual(&sol, &system).unwrap();
            prop_assert!(kkt.overall <= 1e-8, "kkt {}", kkt.overall);
            for s in 0..2 {
                let p = &sol.prices[s];
                let flow = sol.flows[s].flows[0];
                // Prices split only across a saturated line.
                if (p.area_prices[0] - p.area_prices[1]).abs() > 1e-6 {
                    prop_assert!(limit - flow.abs() <= 1e-6 * limit);
                }
                prop_assert!(sol.duals.line_upper[s][0] >= 0.0 && sol.duals.line_lower[s][0] >= 0.0);
            }
            Ok(())
        },
    )
}
