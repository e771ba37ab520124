//! Equilibrium computation: damped Gauss–Seidel best responses for a warm start, then a
//! semismooth Newton polish of the stacked complementarity system.

use std::time::Instant;

use super::players::{producer_best_response_on, supplier_best_response_on, Profile};
use super::solution::{Diagnostics, EquilibriumSolution};
use super::system::{McpSystem, VarBlock};
use super::{EquilibriumError, Instance};
use crate::grid::{clear_day_ahead, DayAheadClearing, BINDING_TOL};
use crate::mcp::{solve_mcp, NewtonOptions};
use crate::model::MarketConfig;
use crate::uncertainty::{PlayerWeights, ScenarioSet};

/// Initial strategy profile of the best-response iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    /// Every intercept at the bidder's own marginal value of a first MW (no contracts),
    /// zero wheeling fees and single-node Cournot output.
    NoTrade,
    /// Explicit intercepts `alpha [i][j]` and `epsilon [j][i]`; output and fees as in
    /// [`StartPoint::NoTrade`].
    Intercepts {
        alpha: Vec<Vec<f64>>,
        epsilon: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Weight on the new best response in each Gauss–Seidel update, in (0, 1].
    pub damping: f64,
    /// Largest strategy change at which best-response iteration stops.
    pub best_response_tol: f64,
    pub max_cycles: usize,
    /// Cycles without a new minimum change before iteration is declared oscillating.
    pub oscillation_window: usize,
    pub kkt_tol: f64,
    pub newton_max_iter: usize,
    pub start: StartPoint,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            damping: 0.5,
            best_response_tol: 1e-6,
            max_cycles: 500,
            oscillation_window: 50,
            kkt_tol: 1e-8,
            newton_max_iter: 200,
            start: StartPoint::NoTrade,
        }
    }
}

fn start_profile(inst: &Instance, start: &StartPoint) -> Result<Profile, EquilibriumError> {
    let cfg = &inst.config;
    let (n_p, n_c, n_s) = (inst.n_producers(), inst.n_suppliers(), inst.n_scenarios());
    let (alpha, epsilon) = match start {
        StartPoint::NoTrade => (
            cfg.producers.iter().map(|p| vec![p.a; n_c]).collect(),
            cfg.suppliers.iter().map(|c| vec![c.c; n_p]).collect(),
        ),
        StartPoint::Intercepts { alpha, epsilon } => {
            let ok = alpha.len() == n_p
                && alpha.iter().all(|r| r.len() == n_c)
                && epsilon.len() == n_c
                && epsilon.iter().all(|r| r.len() == n_p);
            if !ok {
                return Err(EquilibriumError::Dimension(format!(
                    "start intercepts must be {n_p}x{n_c} and {n_c}x{n_p}"
                )));
            }
            (alpha.clone(), epsilon.clone())
        }
    };
    let mut profile = Profile {
        alpha,
        epsilon,
        q: vec![vec![0.0; n_s]; n_p],
        fees: vec![vec![0.0; inst.n_areas()]; n_s],
    };
    let pos = profile.position(inst);
    let contracted: f64 = pos.quantity.iter().flatten().sum();
    for s in 0..n_s {
        let q = cournot_output(inst, inst.wind[s].iter().sum::<f64>() + contracted, &pos);
        for i in 0..n_p {
            profile.q[i][s] = q[i];
        }
    }
    Ok(profile)
}

/// Single-node Cournot output with the hub conjecture, given fixed extra supply.
/// Producers priced out or at capacity are clamped and the rest re-solved.
fn cournot_output(
    inst: &Instance,
    fixed: f64,
    pos: &crate::forward::ForwardPosition,
) -> Vec<f64> {
    let cfg = &inst.config;
    let dd = inst.hub_slope;
    let intercept_sum: f64 = cfg.suppliers.iter().map(|c| c.c / c.d).sum();
    let n_p = cfg.producers.len();
    // None: interior; Some(v): clamped at v.
    let mut clamp: Vec<Option<f64>> = vec![None; n_p];
    loop {
        let mut lhs = 1.0;
        let mut rhs = dd * (intercept_sum - fixed);
        for (i, p) in cfg.producers.iter().enumerate() {
            let qf = pos.producer_total(i);
            match clamp[i] {
                Some(v) => rhs -= dd * v,
                None => {
                    lhs += dd / (p.b + dd);
                    rhs += dd * (p.a + p.b * qf) / (p.b + dd);
                }
            }
        }
        let price = rhs / lhs;
        let mut changed = false;
        let q: Vec<f64> = cfg
            .producers
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let qf = pos.producer_total(i);
                let cap = (p.q_max - qf).max(0.0);
                match clamp[i] {
                    Some(v) => v,
                    None => {
                        let v = (price - p.a - p.b * qf) / (p.b + dd);
                        if v < 0.0 || v > cap {
                            clamp[i] = Some(v.clamp(0.0, cap));
                            changed = true;
                        }
                        v.clamp(0.0, cap)
                    }
                }
            })
            .collect();
        if !changed {
            return q;
        }
    }
}

/// Day-ahead clearing of every scenario under the physical supply implied by `profile`.
fn clear_all_scenarios(
    inst: &Instance,
    profile: &Profile,
) -> Result<Vec<DayAheadClearing>, EquilibriumError> {
    let cfg = &inst.config;
    let pos = profile.position(inst);
    let forward_import = pos.forward_import(cfg);
    let (c, d) = inst.demand_by_area();
    let mut sell = vec![0.0; inst.n_areas()];
    for (i, p) in cfg.producers.iter().enumerate() {
        sell[p.area] += pos.producer_total(i);
    }
    (0..inst.n_scenarios())
        .map(|s| {
            let mut supply: Vec<f64> = (0..inst.n_areas()).map(|k| inst.wind[s][k] + sell[k]).collect();
            for (i, p) in cfg.producers.iter().enumerate() {
                supply[p.area] += profile.q[i][s];
            }
            Ok(clear_day_ahead(&inst.network, s, &supply, &forward_import, &c, &d)?)
        })
        .collect()
}

struct IterationResult {
    profile: Profile,
    cycles: usize,
    converged: bool,
    oscillating: bool,
    trace: Vec<f64>,
}

fn best_response_iteration(
    inst: &Instance,
    mut profile: Profile,
    opts: &SolveOptions,
) -> Result<IterationResult, EquilibriumError> {
    let theta = opts.damping;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut oscillating = false;
    for _ in 0..opts.max_cycles {
        let mut change: f64 = 0.0;
        let mut blend = |old: &mut f64, new: f64| {
            let next = *old + theta * (new - *old);
            change = change.max((next - *old).abs());
            *old = next;
        };
        for i in 0..inst.n_producers() {
            let br = producer_best_response_on(inst, i, &profile)?;
            for (s, &q) in br.q_dp.iter().enumerate() {
                blend(&mut profile.q[i][s], q);
            }
            for (j, &a) in br.alpha_row.iter().enumerate() {
                blend(&mut profile.alpha[i][j], a);
            }
        }
        for j in 0..inst.n_suppliers() {
            let br = supplier_best_response_on(inst, j, &profile)?;
            for (i, &e) in br.epsilon_row.iter().enumerate() {
                blend(&mut profile.epsilon[j][i], e);
            }
        }
        let cleared = clear_all_scenarios(inst, &profile)?;
        for (s, cl) in cleared.iter().enumerate() {
            for (k, &w) in cl.prices.wheeling_fees.iter().enumerate() {
                blend(&mut profile.fees[s][k], w);
            }
        }
        trace.push(change);
        if change < opts.best_response_tol {
            converged = true;
            break;
        }
        let n = trace.len();
        if n > opts.oscillation_window {
            let split = n - opts.oscillation_window;
            let before = trace[..split].iter().copied().fold(f64::INFINITY, f64::min);
            let recent = trace[split..].iter().copied().fold(f64::INFINITY, f64::min);
            if recent >= before {
                oscillating = true;
                break;
            }
        }
    }
    Ok(IterationResult {
        profile,
        cycles: trace.len(),
        converged,
        oscillating,
        trace,
    })
}

/// Newton starting point: strategies from the iteration, network state and prices from a
/// fresh clearing, capacity multipliers from fresh best responses.
fn warm_start(sys: &McpSystem, profile: &Profile) -> Result<Vec<f64>, EquilibriumError> {
    let inst = &sys.instance;
    let cleared = clear_all_scenarios(inst, profile)?;
    let mut seed = profile.clone();
    seed.fees = cleared.iter().map(|c| c.prices.wheeling_fees.clone()).collect();
    let mut capacity = Vec::with_capacity(inst.n_producers());
    for i in 0..inst.n_producers() {
        let br = producer_best_response_on(inst, i, &seed)?;
        capacity.push(
            br.capacity_duals
                .iter()
                .zip(&inst.weights.producers[i])
                .map(|(k, rho)| k * rho)
                .collect(),
        );
    }
    Ok(sys.seed(&seed, &cleared, &capacity))
}

/// Largest mismatch of the physical balances: hub balance and nodal power balance.
fn clearing_residual(sys: &McpSystem, x: &[f64]) -> f64 {
    let f = sys.residual(x);
    sys.variables
        .iter()
        .zip(&f)
        .filter(|(v, _)| {
            matches!(v.block, VarBlock::HubBalance | VarBlock::PowerBalance)
        })
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max)
}

/// Compute a Nash equilibrium of the joint forward and day-ahead markets.
pub fn solve_equilibrium(
    config: &MarketConfig,
    scenarios: &ScenarioSet,
    weights: &PlayerWeights,
    options: &SolveOptions,
) -> Result<EquilibriumSolution, EquilibriumError> {
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(EquilibriumError::Dimension(format!(
            "damping must lie in (0, 1], got {}",
            options.damping
        )));
    }
    let started = Instant::now();
    let inst = Instance::new(config, scenarios, weights)?;
    let profile = start_profile(&inst, &options.start)?;
    let iter = best_response_iteration(&inst, profile, options)?;
    let sys = McpSystem::new(inst);
    let x0 = warm_start(&sys, &iter.profile)?;
    let newton = solve_mcp(
        &sys,
        &x0,
        &NewtonOptions {
            tol: options.kkt_tol,
            max_iter: options.newton_max_iter,
        },
    );
    let last_change = iter.trace.last().copied().unwrap_or(f64::NAN);
    if !newton.converged {
        return Err(if iter.oscillating {
            EquilibriumError::Oscillation {
                cycles: iter.cycles,
                last_change,
                residual: newton.residual,
                trace: iter.trace,
            }
        } else {
            EquilibriumError::NonConvergence {
                cycles: iter.cycles,
                last_change,
                residual: newton.residual,
                trace: iter.trace,
            }
        });
    }

    let report = sys.report(&newton.x);
    let diagnostics = Diagnostics {
        start: match options.start {
            StartPoint::NoTrade => "no-trade".into(),
            StartPoint::Intercepts { .. } => "intercepts".into(),
        },
        damping: options.damping,
        best_response_cycles: iter.cycles,
        best_response_converged: iter.converged,
        best_response_oscillating: iter.oscillating,
        best_response_trace: iter.trace,
        newton_iterations: newton.iterations,
        kkt_residual: report.overall,
        kkt_blocks: report.blocks,
        clearing_residual: clearing_residual(&sys, &newton.x),
        degenerate_lines: Vec::new(),
        wall_time_s: 0.0,
    };
    let mut sol = sys.unpack(&newton.x, diagnostics);
    sol.diagnostics.degenerate_lines = degenerate_lines(&sys, &sol);
    sol.diagnostics.wall_time_s = started.elapsed().as_secs_f64();
    Ok(sol)
}

/// Lines at a limit whose multiplier is zero: congestion rents there are not unique.
fn degenerate_lines(sys: &McpSystem, sol: &EquilibriumSolution) -> Vec<(usize, usize)> {
    let lines = &sys.instance.network.lines;
    let mut out = Vec::new();
    for (s, flow) in sol.flows.iter().enumerate() {
        for (l, line) in lines.iter().enumerate() {
            let f = flow.flows[l];
            let at_upper = line.t_max.is_finite() && (line.t_max - f).abs() <= BINDING_TOL;
            let at_lower = line.t_min.is_finite() && (f - line.t_min).abs() <= BINDING_TOL;
            let mu_upper = sol.duals.line_upper[s][l];
            let mu_lower = sol.duals.line_lower[s][l];
            if (at_upper && mu_upper <= BINDING_TOL) || (at_lower && mu_lower <= BINDING_TOL) {
                out.push((s, l));
            }
        }
    }
    out
}
