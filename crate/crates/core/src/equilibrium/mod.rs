//! Nash equilibrium of the joint forward and day-ahead markets.
//!
//! Every player maximizes its own expected payoff under concern weights, holding rivals'
//! strategies and the wheeling fees fixed. A producer conjectures that the hub price falls by
//! `D = 1/Σ_k(1/d_k)` per MW it adds anywhere in the system; a supplier conjectures the same
//! slope for its forward purchases. Stacking all first-order conditions with the transmission
//! operator's optimality conditions gives one affine mixed complementarity problem.

mod oracle;
mod players;
mod solution;
mod solve;
mod system;
mod verify;

pub use oracle::{brute_force_nash, OracleError, OracleGrid, OracleResult};
pub use players::{
    producer_best_response, producer_profit, supplier_best_response, supplier_utility,
    ProducerResponse, SupplierResponse,
};
pub use solution::{
    Diagnostics, DualVariables, EquilibriumSolution, ProducerStrategy, SupplierStrategy,
};
pub use solve::{solve_equilibrium, SolveOptions, StartPoint};
pub use system::{assemble_mcp, kkt_residual, KktReport, McpSystem, VarBlock, VarInfo};
pub use verify::{
    verify_invariants, verify_no_profitable_deviation, DeviationGrid, DeviationReport,
    PlayerDeviation,
};

use crate::grid::{GridError, Network};
use crate::model::MarketConfig;
use crate::qp::QpError;
use crate::uncertainty::{PlayerWeights, ScenarioSet};

#[derive(Debug, thiserror::Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("best response of {player}: {source}")]
    BestResponse { player: String, source: QpError },
    #[error("inputs are inconsistent: {0}")]
    Dimension(String),
    #[error(
        "no convergence: best-response iteration stopped after {cycles} cycles \
         (last change {last_change:.3e}); Newton polish reached KKT residual {residual:.3e}"
    )]
    NonConvergence {
        cycles: usize,
        last_change: f64,
        residual: f64,
        trace: Vec<f64>,
    },
    #[error(
        "oscillation: best-response change stopped decreasing after {cycles} cycles \
         (last change {last_change:.3e}) and Newton polish reached KKT residual \
         {residual:.3e}; try a lower damping factor"
    )]
    Oscillation {
        cycles: usize,
        last_change: f64,
        residual: f64,
        trace: Vec<f64>,
    },
}

/// Market data with derived quantities shared by all equilibrium computations.
#[derive(Debug, Clone)]
pub struct Instance {
    pub config: MarketConfig,
    pub network: Network,
    pub scenarios: ScenarioSet,
    pub weights: PlayerWeights,
    /// Aggregate inverse-demand slope `1/Σ_k(1/d_k)`.
    pub hub_slope: f64,
    /// Supplier serving each area.
    pub supplier_of_area: Vec<usize>,
    /// Wind output `[s][k]`.
    pub wind: Vec<Vec<f64>>,
}

impl Instance {
    pub fn new(
        config: &MarketConfig,
        scenarios: &ScenarioSet,
        weights: &PlayerWeights,
    ) -> Result<Self, EquilibriumError> {
        let n_s = scenarios.count();
        let n_a = config.n_areas();
        if scenarios.outputs.iter().any(|r| r.len() != n_a) {
            return Err(EquilibriumError::Dimension(format!(
                "scenario rows must have {n_a} areas"
            )));
        }
        let bad_weights = weights.producers.len() != config.producers.len()
            || weights.suppliers.len() != config.suppliers.len()
            || weights
                .producers
                .iter()
                .chain(&weights.suppliers)
                .any(|w| w.len() != n_s || w.iter().any(|&v| !(v > 0.0)));
        if bad_weights {
            return Err(EquilibriumError::Dimension(
                "one positive weight per scenario per player is required".into(),
            ));
        }
        if (0..n_a).any(|k| config.suppliers.iter().filter(|s| s.area == k).count() != 1) {
            return Err(EquilibriumError::Dimension(
                "every area needs exactly one supplier".into(),
            ));
        }
        let network = Network::new(config)?;
        let hub_slope = 1.0 / config.suppliers.iter().map(|s| 1.0 / s.d).sum::<f64>();
        let supplier_of_area = (0..n_a).map(|k| config.supplier_of_area(k)).collect();
        Ok(Instance {
            config: config.clone(),
            network,
            scenarios: scenarios.clone(),
            weights: weights.clone(),
            hub_slope,
            supplier_of_area,
            wind: scenarios.outputs.clone(),
        })
    }

    pub fn n_producers(&self) -> usize {
        self.config.producers.len()
    }

    pub fn n_suppliers(&self) -> usize {
        self.config.suppliers.len()
    }

    pub fn n_areas(&self) -> usize {
        self.config.n_areas()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.count()
    }

    /// `c` and `d` of the supplier in each area.
    pub fn demand_by_area(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self
            .supplier_of_area
            .iter()
            .map(|&j| self.config.suppliers[j].c)
            .collect();
        let d = self
            .supplier_of_area
            .iter()
            .map(|&j| self.config.suppliers[j].d)
            .collect();
        (c, d)
    }
}
