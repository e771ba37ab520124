//! Equilibrium solution document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::players::Profile;
use crate::forward::ForwardPosition;
use crate::grid::{FlowState, PriceState};
use crate::uncertainty::{PlayerWeights, ScenarioSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProducerStrategy {
    pub id: String,
    /// Index into `area_ids`.
    pub area: usize,
    /// Forward intercept toward each supplier ($/MWh).
    pub alpha_row: Vec<f64>,
    /// Day-ahead output per scenario (MW).
    pub q_dp: Vec<f64>,
    /// Conjectured power delivered to each area from the hub, `[s][k]` (MW).
    pub x: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplierStrategy {
    pub id: String,
    /// Index into `area_ids`.
    pub area: usize,
    /// Forward intercept toward each producer ($/MWh).
    pub epsilon_row: Vec<f64>,
    /// Day-ahead purchases per scenario (MW).
    pub q_dc: Vec<f64>,
    /// Conjectured power delivered to each area from the hub, `[s][k]` (MW).
    pub z: Vec<Vec<f64>>,
}

/// Multipliers of every player's constraints, in the units of that player's objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVariables {
    /// Capacity constraint of producer i in scenario s, `[i][s]`.
    pub capacity: Vec<Vec<f64>>,
    /// Shared nonnegativity multiplier of contract (i, j), `[i][j]` ($/MW²h · MW).
    pub contract: Vec<Vec<f64>>,
    /// Producer-side contract nonnegativity multiplier, `[i][j]`.
    pub producer_contract: Vec<Vec<f64>>,
    /// Supplier-side contract nonnegativity multiplier, `[j][i]`.
    pub supplier_contract: Vec<Vec<f64>>,
    /// Producer price-link multipliers, `[i][s][k]`.
    pub hub_link: Vec<Vec<Vec<f64>>>,
    /// Producer injection-balance multipliers, `[i][s]`.
    pub producer_balance: Vec<Vec<f64>>,
    /// Supplier injection-balance multipliers, `[j][s]`.
    pub supplier_balance: Vec<Vec<f64>>,
    /// Upper line-limit multipliers, `[s][l]`.
    pub line_upper: Vec<Vec<f64>>,
    /// Lower line-limit multipliers, `[s][l]`.
    pub line_lower: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub start: String,
    pub damping: f64,
    pub best_response_cycles: usize,
    pub best_response_converged: bool,
    pub best_response_oscillating: bool,
    /// Max strategy change per best-response cycle.
    pub best_response_trace: Vec<f64>,
    pub newton_iterations: usize,
    pub kkt_residual: f64,
    pub kkt_blocks: BTreeMap<String, f64>,
    /// Largest market-clearing mismatch (MW).
    pub clearing_residual: f64,
    /// `(scenario, line)` pairs at a limit with a zero multiplier.
    pub degenerate_lines: Vec<(usize, usize)>,
    /// Not serialized so that solution documents are byte-reproducible.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub config_name: String,
    pub config_hash: String,
    pub area_ids: Vec<String>,
    pub scenarios: ScenarioSet,
    pub weights: PlayerWeights,
    pub producers: Vec<ProducerStrategy>,
    pub suppliers: Vec<SupplierStrategy>,
    pub forward: ForwardPosition,
    pub flows: Vec<FlowState>,
    pub prices: Vec<PriceState>,
    pub duals: DualVariables,
    pub diagnostics: Diagnostics,
}

impl EquilibriumSolution {
    pub(crate) fn profile(&self) -> Profile {
        Profile {
            alpha: self.producers.iter().map(|p| p.alpha_row.clone()).collect(),
            epsilon: self.suppliers.iter().map(|s| s.epsilon_row.clone()).collect(),
            q: self.producers.iter().map(|p| p.q_dp.clone()).collect(),
            fees: self.prices.iter().map(|p| p.wheeling_fees.clone()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Area price of area `k` in scenario `s`.
    pub fn area_price(&self, s: usize, k: usize) -> f64 {
        self.prices[s].area_prices[k]
    }

    /// Uniform mean over scenarios of each area price.
    pub fn mean_area_prices(&self) -> Vec<f64> {
        let n_s = self.prices.len() as f64;
        let n_a = self.area_ids.len();
        (0..n_a)
            .map(|k| self.prices.iter().map(|p| p.area_prices[k]).sum::<f64>() / n_s)
            .collect()
    }
}
