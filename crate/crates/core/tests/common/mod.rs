//! Small hand-built markets shared by the integration tests.
#![allow(dead_code)]

use nashgrid_core::model::{Area, Line, MarketConfig, ProducerParams, SupplierParams};
use nashgrid_core::{PlayerWeights, ScenarioSet};

pub fn area(id: &str) -> Area {
    Area {
        id: id.into(),
        voltage: 1.0,
    }
}

pub fn producer(id: &str, area: usize, a: f64, b: f64, q_max: f64, beta: f64) -> ProducerParams {
    ProducerParams {
        id: id.into(),
        area,
        a,
        b,
        q_max,
        beta,
    }
}

pub fn supplier(id: &str, area: usize, c: f64, d: f64, beta: f64) -> SupplierParams {
    SupplierParams {
        id: id.into(),
        area,
        c,
        d,
        beta,
    }
}

pub fn market(name: &str, areas: Vec<Area>, producers: Vec<ProducerParams>, suppliers: Vec<SupplierParams>, lines: Vec<Line>, scenario_count: usize) -> MarketConfig {
    MarketConfig {
        name: name.into(),
        areas,
        producers,
        suppliers,
        lines,
        wind_plants: Vec::new(),
        wind_correlation: Vec::new(),
        hub_area: 0,
        scenario_count,
    }
}

/// Tiny instance parameters.
pub const TINY_A: f64 = 20.0;
pub const TINY_B: f64 = 0.008;
pub const TINY_C: f64 = 60.0;
pub const TINY_D: f64 = 0.006;
pub const TINY_WIND: f64 = 500.0;

/// One producer, one supplier, one area, one scenario; capacity never binds.
pub fn tiny() -> (MarketConfig, ScenarioSet, PlayerWeights) {
    let cfg = market(
        "tiny",
        vec![area("A")],
        vec![producer("P1", 0, TINY_A, TINY_B, 1e6, 0.5)],
        vec![supplier("C1", 0, TINY_C, TINY_D, 0.5)],
        Vec::new(),
        1,
    );
    let set = ScenarioSet::single(vec![TINY_WIND]);
    let w = PlayerWeights::uniform(&cfg, 1);
    (cfg, set, w)
}

/// Hand-derived equilibrium of [`tiny`].
pub struct TinyEquilibrium {
    pub q: f64,
    pub contract: f64,
    pub price: f64,
    pub contract_price: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

/// Producer: price − d·q = marginal cost and ε − 2dQ = price; supplier: F + bQ = price + d·(q + w).
pub fn tiny_analytic() -> TinyEquilibrium {
    let (a, b, c, d, w) = (TINY_A, TINY_B, TINY_C, TINY_D, TINY_WIND);
    let q = (c - a - 2.0 * d * w) / (3.0 * d + b);
    let contract = d * (q + w) / (b + d);
    let price = c - d * (q + contract + w);
    let contract_price = price + d * contract;
    TinyEquilibrium {
        q,
        contract,
        price,
        contract_price,
        alpha: contract_price - b * contract,
        epsilon: contract_price + d * contract,
    }
}

/// Two identical producers selling to one supplier in one area, two wind scenarios.
pub fn symmetric_duopoly() -> (MarketConfig, ScenarioSet, PlayerWeights) {
    let cfg = market(
        "duopoly",
        vec![area("A")],
        vec![
            producer("P1", 0, 18.0, 0.01, 1e6, 0.6),
            producer("P2", 0, 18.0, 0.01, 1e6, 0.6),
        ],
        vec![supplier("C1", 0, 62.0, 0.004, 0.5)],
        Vec::new(),
        2,
    );
    let set = ScenarioSet::from_outputs(vec![vec![300.0], vec![900.0]]);
    let w = PlayerWeights::for_config(&cfg, &set).unwrap();
    (cfg, set, w)
}

/// Cheap producer in area A, demand in A and B, one 100 MW line A→B that binds.
pub fn two_area_congested() -> (MarketConfig, ScenarioSet, PlayerWeights) {
    let cfg = market(
        "two-area",
        vec![area("A"), area("B")],
        vec![producer("P1", 0, 15.0, 0.012, 1e6, 0.5)],
        vec![
            supplier("C1", 0, 55.0, 0.008, 0.5),
            supplier("C2", 1, 65.0, 0.006, 0.5),
        ],
        vec![Line {
            from: 0,
            to: 1,
            susceptance: 1000.0,
            t_max: 100.0,
            t_min: -100.0,
        }],
        1,
    );
    let set = ScenarioSet::single(vec![200.0, 0.0]);
    let w = PlayerWeights::uniform(&cfg, 1);
    (cfg, set, w)
}
pub mod suites;
pub mod agreement;
