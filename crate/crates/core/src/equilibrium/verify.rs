//! Independent checks of an accepted solution: unilateral deviations and stored invariants.

use serde::{Deserialize, Serialize};

use super::players::{
    producer_best_response_on, producer_profit, producer_qp, supplier_best_response_on,
    supplier_qp, supplier_utility, Profile,
};
use super::solution::EquilibriumSolution;
use super::system::McpSystem;
use super::{EquilibriumError, Instance};
use crate::model::MarketConfig;
use crate::uncertainty::{PlayerWeights, Role, ScenarioSet};

/// Coordinate grid searched around the solution in addition to the exact best response.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationGrid {
    /// Step on forward intercepts ($/MWh).
    pub intercept_step: f64,
    /// Step on day-ahead output (MW).
    pub quantity_step: f64,
    /// Points on each side of the solution per coordinate.
    pub steps: usize,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        DeviationGrid {
            intercept_step: 0.5,
            quantity_step: 5.0,
            steps: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerDeviation {
    pub player: String,
    pub role: Role,
    pub current: f64,
    pub best_response: f64,
    pub best_grid: f64,
    /// `(best − current) / max(|current|, 1)` over both searches.
    pub relative_improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub players: Vec<PlayerDeviation>,
    pub max_relative_improvement: f64,
}

impl DeviationReport {
    pub fn to_table(&self) -> String {
        let mut out = String::from("player\trole\tcurrent\tbest_response\tbest_grid\trelative_improvement\n");
        for p in &self.players {
            let role = match p.role {
                Role::Producer => "producer",
                Role::Supplier => "supplier",
            };
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.3e}\n",
                p.player, role, p.current, p.best_response, p.best_grid, p.relative_improvement
            ));
        }
        out
    }
}

fn relative(best: f64, current: f64) -> f64 {
    (best - current) / current.abs().max(1.0)
}

/// Area price series seen by a player, shifted by a uniform change of the hub price.
fn shifted(prices: &[f64], shift: &[f64]) -> Vec<f64> {
    prices.iter().zip(shift).map(|(p, d)| p + d).collect()
}

fn check_solution_shape(inst: &Instance, sol: &EquilibriumSolution) -> Result<(), EquilibriumError> {
    let ok = sol.producers.len() == inst.n_producers()
        && sol.suppliers.len() == inst.n_suppliers()
        && sol.prices.len() == inst.n_scenarios()
        && sol.area_ids.len() == inst.n_areas()
        && sol.producers.iter().all(|p| p.q_dp.len() == inst.n_scenarios() && p.alpha_row.len() == inst.n_suppliers())
        && sol.suppliers.iter().all(|s| s.epsilon_row.len() == inst.n_producers() && s.q_dc.len() == inst.n_scenarios())
        && sol.prices.iter().all(|p| p.area_prices.len() == inst.n_areas());
    if ok {
        Ok(())
    } else {
        Err(EquilibriumError::Dimension(
            "solution dimensions do not match the configuration".into(),
        ))
    }
}

fn producer_payoff(inst: &Instance, i: usize, profile: &Profile, area_prices: &[f64], q_dp: &[f64]) -> f64 {
    let cfg = &inst.config;
    let contracts: Vec<(f64, f64)> = (0..inst.n_suppliers())
        .map(|j| {
            let q = profile.quantity(inst, i, j);
            (q, profile.epsilon[j][i] - cfg.suppliers[j].d * q)
        })
        .collect();
    producer_profit(cfg, i, q_dp, &contracts, area_prices, &inst.weights.producers[i])
}

fn supplier_payoff(inst: &Instance, j: usize, profile: &Profile, area_prices: &[f64]) -> f64 {
    let cfg = &inst.config;
    let sup = &cfg.suppliers[j];
    let contracts: Vec<(f64, f64)> = (0..inst.n_producers())
        .map(|i| {
            let q = profile.quantity(inst, i, j);
            (q, profile.epsilon[j][i] - sup.d * q)
        })
        .collect();
    let purchases: f64 = contracts.iter().map(|c| c.0).sum();
    // Day-ahead purchases follow inverse demand at the realized price.
    let q_dc: Vec<f64> = area_prices
        .iter()
        .map(|p| (sup.c - p) / sup.d - purchases)
        .collect();
    supplier_utility(cfg, j, &q_dc, &contracts, area_prices, &inst.weights.suppliers[j])
}

fn producer_grid(inst: &Instance, i: usize, profile: &Profile, prices: &[f64], grid: &DeviationGrid) -> f64 {
    let p = &inst.config.producers[i];
    let dd = inst.hub_slope;
    let n_s = inst.n_scenarios();
    let q_now = profile.q[i].clone();
    let qf_now: f64 = (0..inst.n_suppliers()).map(|j| profile.quantity(inst, i, j)).sum();
    let mut best = f64::NEG_INFINITY;
    let offsets = (1..=grid.steps).flat_map(|k| [k as f64, -(k as f64)]);
    for step in offsets {
        for j in 0..inst.n_suppliers() {
            let mut dev = profile.clone();
            dev.alpha[i][j] += step * grid.intercept_step;
            let qf: f64 = (0..inst.n_suppliers()).map(|m| dev.quantity(inst, i, m)).sum();
            let q_new = dev.quantity(inst, i, j);
            if q_new < 0.0 || (0..n_s).any(|s| q_now[s] + qf > p.q_max + 1e-9) {
                continue;
            }
            let shift = vec![-dd * (qf - qf_now); n_s];
            best = best.max(producer_payoff(inst, i, &dev, &shifted(prices, &shift), &q_now));
        }
        for s in 0..n_s {
            let q = q_now[s] + step * grid.quantity_step;
            if q < 0.0 || q + qf_now > p.q_max + 1e-9 {
                continue;
            }
            let mut q_dp = q_now.clone();
            q_dp[s] = q;
            let mut shift = vec![0.0; n_s];
            shift[s] = -dd * (q - q_now[s]);
            best = best.max(producer_payoff(inst, i, profile, &shifted(prices, &shift), &q_dp));
        }
    }
    best
}

fn supplier_grid(inst: &Instance, j: usize, profile: &Profile, prices: &[f64], grid: &DeviationGrid) -> f64 {
    let dd = inst.hub_slope;
    let n_s = inst.n_scenarios();
    let qf_now: f64 = (0..inst.n_producers()).map(|i| profile.quantity(inst, i, j)).sum();
    let mut best = f64::NEG_INFINITY;
    for k in (1..=grid.steps).flat_map(|k| [k as f64, -(k as f64)]) {
        for i in 0..inst.n_producers() {
            let mut dev = profile.clone();
            dev.epsilon[j][i] += k * grid.intercept_step;
            if dev.quantity(inst, i, j) < 0.0 {
                continue;
            }
            let qf: f64 = (0..inst.n_producers()).map(|m| dev.quantity(inst, m, j)).sum();
            let shift = vec![-dd * (qf - qf_now); n_s];
            best = best.max(supplier_payoff(inst, j, &dev, &shifted(prices, &shift)));
        }
    }
    best
}

/// Largest expected-payoff gain any single player can obtain with rivals and wheeling fees held
/// at the solution: each player's exact best response, plus a coordinate grid around it.
pub fn verify_no_profitable_deviation(
    solution: &EquilibriumSolution,
    config: &MarketConfig,
    scenarios: &ScenarioSet,
    weights: &PlayerWeights,
    grid: &DeviationGrid,
) -> Result<DeviationReport, EquilibriumError> {
    let inst = Instance::new(config, scenarios, weights)?;
    check_solution_shape(&inst, solution)?;
    let profile = solution.profile();
    let cfg = &inst.config;
    let n_s = inst.n_scenarios();
    let mut players = Vec::new();

    for (i, p) in cfg.producers.iter().enumerate() {
        let prices: Vec<f64> = (0..n_s).map(|s| solution.area_price(s, p.area)).collect();
        let current = producer_payoff(&inst, i, &profile, &prices, &profile.q[i]);
        let br = producer_best_response_on(&inst, i, &profile)?;
        let best_grid = producer_grid(&inst, i, &profile, &prices, grid);
        players.push(PlayerDeviation {
            player: p.id.clone(),
            role: Role::Producer,
            current,
            best_response: br.profit,
            best_grid,
            relative_improvement: relative(br.profit.max(best_grid), current),
        });
    }
    for (j, sup) in cfg.suppliers.iter().enumerate() {
        let prices: Vec<f64> = (0..n_s).map(|s| solution.area_price(s, sup.area)).collect();
        let current = supplier_payoff(&inst, j, &profile, &prices);
        let br = supplier_best_response_on(&inst, j, &profile)?;
        let best_grid = supplier_grid(&inst, j, &profile, &prices, grid);
        players.push(PlayerDeviation {
            player: sup.id.clone(),
            role: Role::Supplier,
            current,
            best_response: br.utility,
            best_grid,
            relative_improvement: relative(br.utility.max(best_grid), current),
        });
    }
    let max_relative_improvement = players
        .iter()
        .map(|p| p.relative_improvement)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DeviationReport {
        players,
        max_relative_improvement,
    })
}

/// Tolerance on physical balances (MW) and on derived prices ($/MWh).
const CLEARING_TOL: f64 = 1e-6;
const PRICE_IDENTITY_TOL: f64 = 1e-9;
const CONCAVITY_TOL: f64 = 1e-9;

/// Every stored invariant of `solution` under `config`; empty means all hold.
///
/// Checks the config hash, dimensions, market clearing, the price identity, inverse demand,
/// capacity, contract and line complementarity, and concavity of each player's problem.
pub fn verify_invariants(solution: &EquilibriumSolution, config: &MarketConfig) -> Vec<String> {
    let mut out = Vec::new();
    let hash = config.content_hash();
    if solution.config_hash != hash {
        out.push(format!(
            "config hash mismatch: solution {} vs config {}",
            solution.config_hash, hash
        ));
        return out;
    }
    let inst = match Instance::new(config, &solution.scenarios, &solution.weights) {
        Ok(inst) => inst,
        Err(e) => {
            out.push(format!("dimension mismatch: {e}"));
            return out;
        }
    };
    if let Err(e) = check_solution_shape(&inst, solution) {
        out.push(format!("dimension mismatch: {e}"));
        return out;
    }
    let cfg = &inst.config;
    let (c, d) = inst.demand_by_area();

    for (s, (flow, price)) in solution.flows.iter().zip(&solution.prices).enumerate() {
        for k in 0..inst.n_areas() {
            let gamma = flow.gamma[k];
            for p in &solution.producers {
                if (p.x[s][k] - gamma).abs() > CLEARING_TOL {
                    out.push(format!("market clearing: producers[{}].x[{s}][{k}] differs from gamma", p.id));
                }
            }
            for sup in &solution.suppliers {
                if (sup.z[s][k] - gamma).abs() > CLEARING_TOL {
                    out.push(format!("market clearing: suppliers[{}].z[{s}][{k}] differs from gamma", sup.id));
                }
            }
            let identity = price.hub_price + price.wheeling_fees[k] - price.area_prices[k];
            if identity.abs() > PRICE_IDENTITY_TOL {
                out.push(format!("price identity: prices[{s}].area_prices[{k}] off by {identity:.3e}"));
            }
        }
        if price.wheeling_fees[inst.network.hub].abs() > PRICE_IDENTITY_TOL {
            out.push(format!("price identity: prices[{s}] hub fee is nonzero"));
        }
        // Consumption from the stored primals: local output, wind, purchases and net import.
        let mut consumption: Vec<f64> = (0..inst.n_areas())
            .map(|k| inst.wind[s][k] + flow.gamma[k])
            .collect();
        for (i, p) in cfg.producers.iter().enumerate() {
            consumption[p.area] += solution.producers[i].q_dp[s];
        }
        for (j, sup) in cfg.suppliers.iter().enumerate() {
            consumption[sup.area] += solution.forward.supplier_total(j);
            let stored = solution.suppliers[j].q_dc[s] + solution.forward.supplier_total(j);
            if (stored - consumption[sup.area]).abs() > CLEARING_TOL {
                out.push(format!("market clearing: suppliers[{}].q_dc[{s}] inconsistent with balance", sup.id));
            }
        }
        for k in 0..inst.n_areas() {
            let gap = price.area_prices[k] - (c[k] - d[k] * consumption[k]);
            if gap.abs() > CLEARING_TOL {
                out.push(format!("inverse demand: prices[{s}].area_prices[{k}] off by {gap:.3e}"));
            }
        }
        let injection = inst.network.net_import(&flow.angles);
        for k in 0..inst.n_areas() {
            let gap = injection[k] - flow.gamma[k] - flow.forward_import[k];
            if gap.abs() > CLEARING_TOL {
                out.push(format!("power balance: flows[{s}] area {k} off by {gap:.3e}"));
            }
        }
        let gamma_sum: f64 = flow.gamma.iter().sum();
        if gamma_sum.abs() > CLEARING_TOL {
            out.push(format!("hub balance: flows[{s}].gamma sums to {gamma_sum:.3e}"));
        }
        let flows = inst.network.line_flows(&flow.angles);
        for (l, line) in inst.network.lines.iter().enumerate() {
            if (flows[l] - flow.flows[l]).abs() > CLEARING_TOL {
                out.push(format!("line flows: flows[{s}].flows[{l}] inconsistent with angles"));
            }
            let up = solution.duals.line_upper[s][l];
            let lo = solution.duals.line_lower[s][l];
            let comp_up = if line.t_max.is_finite() { up.min(line.t_max - flows[l]) } else { up };
            let comp_lo = if line.t_min.is_finite() { lo.min(flows[l] - line.t_min) } else { lo };
            if comp_up.abs() > CLEARING_TOL || comp_lo.abs() > CLEARING_TOL {
                out.push(format!("line complementarity: line {l} scenario {s}"));
            }
        }
    }

    for (i, p) in cfg.producers.iter().enumerate() {
        let qf = solution.forward.producer_total(i);
        for s in 0..inst.n_scenarios() {
            let slack = p.q_max - solution.producers[i].q_dp[s] - qf;
            let comp = solution.duals.capacity[i][s].min(slack);
            if comp.abs() > CLEARING_TOL {
                out.push(format!("capacity complementarity: duals.capacity[{i}][{s}] = {comp:.3e}"));
            }
            if solution.producers[i].q_dp[s] < -CLEARING_TOL {
                out.push(format!("capacity complementarity: producers[{}].q_dp[{s}] negative", p.id));
            }
        }
        for j in 0..inst.n_suppliers() {
            let comp = solution.duals.producer_contract[i][j].min(solution.forward.quantity[i][j]);
            if comp.abs() > CLEARING_TOL {
                out.push(format!("contract complementarity: forward.quantity[{i}][{j}] = {comp:.3e}"));
            }
        }
    }

    let profile = solution.profile();
    for i in 0..inst.n_producers() {
        let curvature = producer_qp(&inst, i, &profile).min_hessian_eigenvalue();
        if curvature < -CONCAVITY_TOL {
            out.push(format!("concavity: producer {i} objective eigenvalue {:.3e}", -curvature));
        }
    }
    for j in 0..inst.n_suppliers() {
        let curvature = supplier_qp(&inst, j, &profile).0.min_hessian_eigenvalue();
        if curvature < -CONCAVITY_TOL {
            out.push(format!("concavity: supplier {j} objective eigenvalue {:.3e}", -curvature));
        }
    }

    let sys = McpSystem::new(inst);
    if let Ok(x) = sys.pack(solution) {
        let report = sys.report(&x);
        for (block, value) in &report.blocks {
            if *value > CLEARING_TOL {
                out.push(format!("kkt block {block}: residual {value:.3e}"));
            }
        }
    }
    out
}
