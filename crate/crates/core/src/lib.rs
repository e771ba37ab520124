//! Nash equilibrium of a joint forward-contract and day-ahead electricity market with wind
//! uncertainty, risk-concern weights and a congestion-pricing transmission operator.
//!
//! Producers and suppliers trade bilateral forward contracts by affine bids, then meet in a
//! day-ahead market cleared over a DC network. The equilibrium is the solution of one affine
//! mixed complementarity problem; see [`equilibrium::solve_equilibrium`].

// Index loops mirror the subscripts of the model; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibrium;
pub mod experiment;
pub mod forward;
pub mod grid;
pub mod mcp;
pub mod model;
pub mod qp;
pub mod report;
pub mod uncertainty;

pub use equilibrium::{
    assemble_mcp, brute_force_nash, kkt_residual, solve_equilibrium, verify_invariants,
    verify_no_profitable_deviation, DeviationGrid, DeviationReport, EquilibriumError,
    EquilibriumSolution, Instance, KktReport, McpSystem, OracleGrid, OracleResult, SolveOptions,
    StartPoint,
};
pub use experiment::{congestion_experiment, CongestionReport};
pub use forward::{clear_all, clear_contract, BidIntercepts, ForwardPosition};
pub use grid::{clear_day_ahead, dc_flow, solve_tso, FlowState, Network, PriceState};
pub use model::{
    bundled_pjm5_case, load_market_config, validate_config, ConfigError, MarketConfig,
    ProducerParams, SupplierParams,
};
pub use uncertainty::{
    bundled_pjm5_scenarios, concern_weights, generate_scenarios, load_scenarios, write_scenarios, PlayerWeights, Role,
    ScenarioError, ScenarioSet,
};
