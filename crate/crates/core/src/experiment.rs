//! Paired solves of one market at two transmission-capacity scales.

use crate::equilibrium::{solve_equilibrium, EquilibriumError, EquilibriumSolution, SolveOptions};
use crate::model::MarketConfig;
use crate::report::{producer_forward_ratios, UNDEFINED};
use crate::uncertainty::{PlayerWeights, ScenarioSet};

/// A forward ratio may drop by at most this much where the local price falls.
pub const DIRECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ProducerDelta {
    pub id: String,
    pub area: String,
    pub base_ratio: Option<f64>,
    pub scaled_ratio: Option<f64>,
    pub base_price: f64,
    pub scaled_price: f64,
}

impl ProducerDelta {
    pub fn ratio_delta(&self) -> Option<f64> {
        Some(self.scaled_ratio? - self.base_ratio?)
    }
    pub fn price_delta(&self) -> f64 {
        self.scaled_price - self.base_price
    }
    /// Direction holds unless the local mean price falls and the forward ratio drops.
    pub fn direction_holds(&self) -> bool {
        if self.price_delta() >= 0.0 {
            return true;
        }
        self.ratio_delta().is_none_or(|d| d >= -DIRECTION_TOL)
    }
}

#[derive(Debug)]
pub struct CongestionReport {
    pub scale: f64,
    pub base: Result<EquilibriumSolution, EquilibriumError>,
    pub scaled: Result<EquilibriumSolution, EquilibriumError>,
    /// Empty when either leg failed.
    pub deltas: Vec<ProducerDelta>,
}

impl CongestionReport {
    pub fn direction_holds(&self) -> bool {
        self.base.is_ok() && self.scaled.is_ok() && self.deltas.iter().all(ProducerDelta::direction_holds)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (leg, res) in [("base", &self.base), ("scaled", &self.scaled)] {
            if let Err(e) = res {
                out.push_str(&format!("# {leg} solve failed: {e}\n"));
            }
        }
        out.push_str(&format!(
            "producer\tarea\tratio_base\tratio_scale_{}\tratio_delta\tmean_price_base\tmean_price_scaled\tprice_delta\tdirection\n",
            self.scale
        ));
        let f = |v: Option<f64>| v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.4}"));
        for d in &self.deltas {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                d.id,
                d.area,
                f(d.base_ratio),
                f(d.scaled_ratio),
                f(d.ratio_delta()),
                d.base_price,
                d.scaled_price,
                d.price_delta(),
                if d.direction_holds() { "ok" } else { "violated" }
            ));
        }
        out
    }
}

/// Per-producer changes between two solutions of the same market.
pub fn compare(base: &EquilibriumSolution, scaled: &EquilibriumSolution) -> Vec<ProducerDelta> {
    let (rb, rs) = (producer_forward_ratios(base), producer_forward_ratios(scaled));
    let (pb, ps) = (base.mean_area_prices(), scaled.mean_area_prices());
    base.producers
        .iter()
        .enumerate()
        .map(|(i, p)| ProducerDelta {
            id: p.id.clone(),
            area: base.area_ids[p.area].clone(),
            base_ratio: rb[i],
            scaled_ratio: rs[i],
            base_price: pb[p.area],
            scaled_price: ps[p.area],
        })
        .collect()
}

/// Solve at the configured line limits and with every limit multiplied by `scale`.
pub fn congestion_experiment(
    config: &MarketConfig,
    scenarios: &ScenarioSet,
    weights: &PlayerWeights,
    scale: f64,
    options: &SolveOptions,
) -> Result<CongestionReport, EquilibriumError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(EquilibriumError::Dimension(format!(
            "line scale must be positive, got {scale}"
        )));
    }
    let base = solve_equilibrium(config, scenarios, weights, options);
    let scaled = solve_equilibrium(&config.with_line_scale(scale), scenarios, weights, options);
    let deltas = match (&base, &scaled) {
        (Ok(b), Ok(s)) => compare(b, s),
        _ => Vec::new(),
    };
    Ok(CongestionReport {
        scale,
        base,
        scaled,
        deltas,
    })
}
