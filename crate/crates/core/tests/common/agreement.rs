//! Solver against the exhaustive grid search on one small market.

use nashgrid_core::model::MarketConfig;
use nashgrid_core::{
    brute_force_nash, solve_equilibrium, EquilibriumSolution, OracleGrid, OracleResult,
    PlayerWeights, ScenarioSet, SolveOptions,
};

pub fn grid(step: f64, min: f64, max: f64) -> OracleGrid {
    OracleGrid {
        step,
        min,
        max,
        max_rounds: 2000,
    }
}

/// Largest gaps between solver and oracle: (intercepts, day-ahead output, contract quantity).
pub fn gaps(sol: &EquilibriumSolution, or: &OracleResult) -> (f64, f64, f64) {
    let mut intercept: f64 = 0.0;
    let mut output: f64 = 0.0;
    let mut contract: f64 = 0.0;
    for (i, p) in sol.producers.iter().enumerate() {
        for j in 0..sol.suppliers.len() {
            intercept = intercept
                .max((p.alpha_row[j] - or.alpha[i][j]).abs())
                .max((sol.suppliers[j].epsilon_row[i] - or.epsilon[j][i]).abs());
            contract = contract.max((sol.forward.quantity[i][j] - or.contracts[i][j]).abs());
        }
        for (s, q) in p.q_dp.iter().enumerate() {
            output = output.max((q - or.q_dp[i][s]).abs());
        }
    }
    (intercept, output, contract)
}

/// Output and contract tolerance implied by a one-step intercept error: a bid moved by one
/// step shifts its contract by at most `step / (b + d)`.
pub fn quantity_tolerance(cfg: &MarketConfig, step: f64) -> f64 {
    let min_slope = cfg
        .producers
        .iter()
        .flat_map(|p| cfg.suppliers.iter().map(move |c| p.b + c.d))
        .fold(f64::INFINITY, f64::min);
    2.0 * step / min_slope
}

/// Largest intercept gap, or a description of the first disagreement.
pub fn agreement(
    name: &str,
    (cfg, set, w): &(MarketConfig, ScenarioSet, PlayerWeights),
    g: &OracleGrid,
) -> Result<f64, String> {
    let sol = solve_equilibrium(cfg, set, w, &SolveOptions::default())
        .map_err(|e| format!("{name}: solver failed: {e}"))?;
    let or = brute_force_nash(cfg, set, w, g).map_err(|e| format!("{name}: oracle failed: {e}"))?;
    let (di, dq, dc) = gaps(&sol, &or);
    let qtol = quantity_tolerance(cfg, g.step);
    if di > g.step + 1e-9 {
        return Err(format!("{name}: intercept gap {di} exceeds step {}", g.step));
    }
    if dq > qtol {
        return Err(format!("{name}: output gap {dq} exceeds {qtol}"));
    }
    if dc > qtol {
        return Err(format!("{name}: contract gap {dc} exceeds {qtol}"));
    }
    Ok(di)
}
