//! DC power flow and the transmission operator's congestion-revenue problem.
//!
//! Sign conventions: `net_import[k] = −(B δ)_k` is the power delivered to area k by the grid,
//! the hub angle is zero, and a positive line flow runs from `from` to `to`. Wheeling fees are
//! `W_k = λ_k − λ_hub`, so `W_hub = 0`.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::MarketConfig;
use crate::qp::{QpError, QpProblem};

/// Tolerance (MW) for treating a line as sitting at its limit.
pub const BINDING_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("susceptance system is singular: area {0} is not connected to the hub")]
    Disconnected(String),
    #[error("injections do not balance (sum {0:.3e} MW)")]
    Unbalanced(f64),
    #[error("expected {expected} per-area values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("transmission revenue is unbounded: wheeling fees reward flow along an unlimited path")]
    Unbounded,
    #[error("line limits are infeasible")]
    Infeasible,
    #[error("day-ahead clearing failed: {0}")]
    Clearing(QpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetLine {
    pub from: usize,
    pub to: usize,
    /// `V_from V_to B` in MW/rad.
    pub coefficient: f64,
    pub t_max: f64,
    pub t_min: f64,
}

/// Per-scenario physical state of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub scenario: usize,
    pub angles: Vec<f64>,
    pub flows: Vec<f64>,
    /// Day-ahead power delivered to each area by the grid (MW).
    pub gamma: Vec<f64>,
    /// Net forward-contract power delivered to each area (purchases minus local sales).
    pub forward_import: Vec<f64>,
}

impl FlowState {
    pub fn net_import(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .zip(&self.forward_import)
            .map(|(g, f)| g + f)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceState {
    pub scenario: usize,
    pub hub_price: f64,
    pub area_prices: Vec<f64>,
    pub wheeling_fees: Vec<f64>,
}

impl PriceState {
    pub fn from_area_prices(scenario: usize, hub: usize, area_prices: Vec<f64>) -> Self {
        let hub_price = area_prices[hub];
        let wheeling_fees = area_prices.iter().map(|p| p - hub_price).collect();
        PriceState {
            scenario,
            hub_price,
            area_prices,
            wheeling_fees,
        }
    }
}

/// Multipliers of the upper and lower flow limits of every line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineDuals {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl LineDuals {
    pub fn zeros(n_lines: usize) -> Self {
        LineDuals {
            upper: vec![0.0; n_lines],
            lower: vec![0.0; n_lines],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsoOutcome {
    pub flow: FlowState,
    pub duals: LineDuals,
}

#[derive(Debug, Clone)]
pub struct DayAheadClearing {
    pub flow: FlowState,
    pub prices: PriceState,
    pub duals: LineDuals,
    /// Total consumption per area (MW).
    pub consumption: Vec<f64>,
}

/// Susceptance structure of a validated configuration.
#[derive(Debug, Clone)]
pub struct Network {
    pub n_areas: usize,
    pub hub: usize,
    pub lines: Vec<NetLine>,
    /// Full nodal susceptance matrix (weighted Laplacian).
    pub bbus: DMatrix<f64>,
    /// Non-hub areas in index order; these carry the free angles.
    pub reduced: Vec<usize>,
    reduced_lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Network {
    pub fn new(config: &MarketConfig) -> Result<Self, GridError> {
        let n = config.n_areas();
        let lines: Vec<NetLine> = config
            .lines
            .iter()
            .map(|l| NetLine {
                from: l.from,
                to: l.to,
                coefficient: config.flow_coefficient(l),
                t_max: l.t_max,
                t_min: l.t_min,
            })
            .collect();
        let mut bbus = DMatrix::zeros(n, n);
        for l in &lines {
            bbus[(l.from, l.from)] += l.coefficient;
            bbus[(l.to, l.to)] += l.coefficient;
            bbus[(l.from, l.to)] -= l.coefficient;
            bbus[(l.to, l.from)] -= l.coefficient;
        }
        let hub = config.hub_area;
        let reduced: Vec<usize> = (0..n).filter(|&k| k != hub).collect();
        let m = reduced.len();
        let bred = DMatrix::from_fn(m, m, |r, c| bbus[(reduced[r], reduced[c])]);
        if let Some(k) = unreachable_from(n, hub, &lines) {
            return Err(GridError::Disconnected(config.areas[k].id.clone()));
        }
        let reduced_lu = bred.lu();
        Ok(Network {
            n_areas: n,
            hub,
            lines,
            bbus,
            reduced,
            reduced_lu,
        })
    }

    fn check_len(&self, v: &[f64]) -> Result<(), GridError> {
        if v.len() != self.n_areas {
            return Err(GridError::Dimension {
                expected: self.n_areas,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Angles solving `B δ = injection` with the hub angle fixed at zero.
    pub fn angles_for_injection(&self, injection: &[f64]) -> Result<Vec<f64>, GridError> {
        self.check_len(injection)?;
        let sum: f64 = injection.iter().sum();
        if sum.abs() > 1e-6 {
            return Err(GridError::Unbalanced(sum));
        }
        let rhs = DVector::from_iterator(
            self.reduced.len(),
            self.reduced.iter().map(|&k| injection[k]),
        );
        let sol = self
            .reduced_lu
            .solve(&rhs)
            .expect("reduced susceptance matrix is invertible");
        let mut angles = vec![0.0; self.n_areas];
        for (r, &k) in self.reduced.iter().enumerate() {
            angles[k] = sol[r];
        }
        Ok(angles)
    }

    pub fn line_flows(&self, angles: &[f64]) -> Vec<f64> {
        self.lines
            .iter()
            .map(|l| l.coefficient * (angles[l.from] - angles[l.to]))
            .collect()
    }

    /// Power delivered to each area, `−B δ`.
    pub fn net_import(&self, angles: &[f64]) -> Vec<f64> {
        (0..self.n_areas)
            .map(|k| -(0..self.n_areas).map(|m| self.bbus[(k, m)] * angles[m]).sum::<f64>())
            .collect()
    }

    /// Largest line flow coefficient, used to scale stationarity rows.
    pub fn max_coefficient(&self) -> f64 {
        self.lines.iter().fold(1.0, |m, l| f64::max(m, l.coefficient))
    }
}

fn unreachable_from(n: usize, hub: usize, lines: &[NetLine]) -> Option<usize> {
    let mut seen = vec![false; n];
    seen[hub] = true;
    let mut stack = vec![hub];
    while let Some(k) = stack.pop() {
        for l in lines {
            for (a, b) in [(l.from, l.to), (l.to, l.from)] {
                if a == k && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    seen.iter().position(|s| !s)
}

/// Solve the DC load flow for per-area injections into the network (generation positive).
pub fn dc_flow(injection: &[f64], config: &MarketConfig) -> Result<FlowState, GridError> {
    let net = Network::new(config)?;
    dc_flow_on(&net, injection, 0)
}

pub fn dc_flow_on(net: &Network, injection: &[f64], scenario: usize) -> Result<FlowState, GridError> {
    let angles = net.angles_for_injection(injection)?;
    Ok(FlowState {
        scenario,
        flows: net.line_flows(&angles),
        gamma: injection.iter().map(|p| -p).collect(),
        forward_import: vec![0.0; net.n_areas],
        angles,
    })
}

fn reduced_row(net: &Network, l: &NetLine) -> Vec<f64> {
    net.reduced
        .iter()
        .map(|&k| {
            if k == l.from {
                l.coefficient
            } else if k == l.to {
                -l.coefficient
            } else {
                0.0
            }
        })
        .collect()
}

/// Line multipliers satisfying `B W + Σ (μ⁺ − μ⁻) c_l A_l = 0` on the binding lines.
fn line_duals_from_stationarity(net: &Network, fees: &[f64], flows: &[f64]) -> LineDuals {
    let mut duals = LineDuals::zeros(net.lines.len());
    let m = net.reduced.len();
    // Target: −(B W) restricted to non-hub rows.
    let target = DVector::from_iterator(
        m,
        net.reduced
            .iter()
            .map(|&k| -(0..net.n_areas).map(|j| net.bbus[(k, j)] * fees[j]).sum::<f64>()),
    );
    let mut cols: Vec<(usize, f64)> = Vec::new();
    for (l, line) in net.lines.iter().enumerate() {
        let tol = BINDING_TOL * line.t_max.abs().max(1.0);
        if line.t_max.is_finite() && flows[l] >= line.t_max - tol {
            cols.push((l, 1.0));
        } else if line.t_min.is_finite() && flows[l] <= line.t_min + tol {
            cols.push((l, -1.0));
        }
    }
    if cols.is_empty() || target.amax() == 0.0 {
        return duals;
    }
    let a = DMatrix::from_fn(m, cols.len(), |r, c| {
        let (l, sign) = cols[c];
        sign * reduced_row(net, &net.lines[l])[r]
    });
    let svd = a.svd(true, true);
    let mu = svd
        .solve(&target, 1e-12 * svd.singular_values.max())
        .expect("SVD with vectors");
    for (c, &(l, sign)) in cols.iter().enumerate() {
        if sign > 0.0 {
            duals.upper[l] = mu[c];
        } else {
            duals.lower[l] = mu[c];
        }
    }
    duals
}

/// Maximize congestion revenue `Σ W_k · net_import_k` over angles within the line limits.
///
/// With all fees zero the zero-flow point is returned.
pub fn solve_tso(
    fees: &[f64],
    forward_import: &[f64],
    net: &Network,
    scenario: usize,
) -> Result<TsoOutcome, GridError> {
    net.check_len(fees)?;
    net.check_len(forward_import)?;
    let zero_flow = |net: &Network| TsoOutcome {
        flow: FlowState {
            scenario,
            angles: vec![0.0; net.n_areas],
            flows: vec![0.0; net.lines.len()],
            gamma: forward_import.iter().map(|f| -f).collect(),
            forward_import: forward_import.to_vec(),
        },
        duals: LineDuals::zeros(net.lines.len()),
    };
    if fees.iter().all(|w| w.abs() <= 1e-12) || net.reduced.is_empty() {
        return Ok(zero_flow(net));
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // d(Σ W y)/dδ_m = −(B W)_m
    let vars: Vec<_> = net
        .reduced
        .iter()
        .map(|&m| {
            let grad = -(0..net.n_areas).map(|k| net.bbus[(m, k)] * fees[k]).sum::<f64>();
            lp.add_var(grad, (f64::NEG_INFINITY, f64::INFINITY))
        })
        .collect();
    for line in &net.lines {
        let row = reduced_row(net, line);
        let mut expr = LinearExpr::empty();
        for (v, &coef) in vars.iter().zip(&row) {
            if coef != 0.0 {
                expr.add(*v, coef);
            }
        }
        if line.t_max.is_finite() {
            lp.add_constraint(expr.clone(), ComparisonOp::Le, line.t_max);
        }
        if line.t_min.is_finite() {
            lp.add_constraint(expr, ComparisonOp::Ge, line.t_min);
        }
    }
    let sol = lp.solve().map_err(|e| match e {
        minilp::Error::Unbounded => GridError::Unbounded,
        minilp::Error::Infeasible => GridError::Infeasible,
    })?;
    let mut angles = vec![0.0; net.n_areas];
    for (v, &k) in vars.iter().zip(&net.reduced) {
        angles[k] = *sol.var_value(*v);
    }
    let flows = net.line_flows(&angles);
    let net_import = net.net_import(&angles);
    let duals = line_duals_from_stationarity(net, fees, &flows);
    Ok(TsoOutcome {
        flow: FlowState {
            scenario,
            gamma: net_import
                .iter()
                .zip(forward_import)
                .map(|(y, f)| y - f)
                .collect(),
            forward_import: forward_import.to_vec(),
            angles,
            flows,
        },
        duals,
    })
}

/// Clear one day-ahead scenario: route power to maximize total consumer surplus given the
/// physical supply in each area, then read area prices off the inverse demand curves.
///
/// `local_supply[k]` is everything produced in area k (day-ahead and contracted output plus
/// wind). The line-limit multipliers of the dispatch problem are the congestion duals.
pub fn clear_day_ahead(
    net: &Network,
    scenario: usize,
    local_supply: &[f64],
    forward_import: &[f64],
    c: &[f64],
    d: &[f64],
) -> Result<DayAheadClearing, GridError> {
    net.check_len(local_supply)?;
    net.check_len(forward_import)?;
    let m = net.reduced.len();
    let n = net.n_areas;
    // Columns of B for the free angles: net_import = −B_r δ.
    let br = DMatrix::from_fn(n, m, |k, r| net.bbus[(k, net.reduced[r])]);
    let base_price = DVector::from_iterator(n, (0..n).map(|k| c[k] - d[k] * local_supply[k]));
    let dmat = DMatrix::from_diagonal(&DVector::from_column_slice(d));
    let hessian = br.transpose() * &dmat * &br;
    let linear = br.transpose() * &base_price;
    let mut qp = QpProblem::new(hessian, linear.iter().copied().collect());
    let mut rows_of_line = Vec::new();
    for (l, line) in net.lines.iter().enumerate() {
        let row = reduced_row(net, line);
        if line.t_max.is_finite() {
            qp.add_le(row.clone(), line.t_max);
            rows_of_line.push((l, true));
        }
        if line.t_min.is_finite() {
            qp.add_le(row.iter().map(|v| -v).collect(), -line.t_min);
            rows_of_line.push((l, false));
        }
    }
    let sol = qp.solve().map_err(GridError::Clearing)?;
    let mut angles = vec![0.0; n];
    for (r, &k) in net.reduced.iter().enumerate() {
        angles[k] = sol.x[r];
    }
    let flows = net.line_flows(&angles);
    let net_import = net.net_import(&angles);
    let consumption: Vec<f64> = (0..n).map(|k| local_supply[k] + net_import[k]).collect();
    let area_prices: Vec<f64> = (0..n).map(|k| c[k] - d[k] * consumption[k]).collect();
    let mut duals = LineDuals::zeros(net.lines.len());
    for (&(l, upper), &mu) in rows_of_line.iter().zip(&sol.multipliers) {
        if upper {
            duals.upper[l] = mu;
        } else {
            duals.lower[l] = mu;
        }
    }
    Ok(DayAheadClearing {
        flow: FlowState {
            scenario,
            gamma: net_import
                .iter()
                .zip(forward_import)
                .map(|(y, f)| y - f)
                .collect(),
            forward_import: forward_import.to_vec(),
            angles,
            flows,
        },
        prices: PriceState::from_area_prices(scenario, net.hub, area_prices),
        duals,
        consumption,
    })
}

/// Residuals of the transmission operator's optimality conditions for one scenario.
///
/// Layout: stationarity per non-hub area, balance per area, hub angle, flow definition per
/// line, limit violations (upper, lower) per line, dual sign (upper, lower) per line and
/// product-form complementarity (upper, lower) per line.
pub fn tso_kkt_block(
    net: &Network,
    flow: &FlowState,
    prices: &PriceState,
    duals: &LineDuals,
) -> Vec<f64> {
    let n = net.n_areas;
    let mut out = Vec::new();
    let scale = net.max_coefficient();
    for &k in &net.reduced {
        let mut r: f64 = (0..n).map(|j| net.bbus[(k, j)] * prices.wheeling_fees[j]).sum();
        for (l, line) in net.lines.iter().enumerate() {
            let a = if k == line.from {
                1.0
            } else if k == line.to {
                -1.0
            } else {
                continue;
            };
            r += (duals.upper[l] - duals.lower[l]) * line.coefficient * a;
        }
        out.push(r / scale);
    }
    let injection: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|j| net.bbus[(k, j)] * flow.angles[j]).sum())
        .collect();
    for k in 0..n {
        out.push(injection[k] + flow.gamma[k] + flow.forward_import[k]);
    }
    out.push(flow.angles[net.hub]);
    for (l, line) in net.lines.iter().enumerate() {
        out.push(flow.flows[l] - line.coefficient * (flow.angles[line.from] - flow.angles[line.to]));
    }
    let gap = |slack: f64, mu: f64| if mu == 0.0 { 0.0 } else { mu * slack };
    for (l, line) in net.lines.iter().enumerate() {
        let f = flow.flows[l];
        out.push((f - line.t_max).max(0.0));
        out.push((line.t_min - f).max(0.0));
        out.push((-duals.upper[l]).max(0.0));
        out.push((-duals.lower[l]).max(0.0));
        out.push(gap(line.t_max - f, duals.upper[l]));
        out.push(gap(f - line.t_min, duals.lower[l]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Area, Line, MarketConfig, SupplierParams};

    pub(crate) fn toy_config(n: usize, lines: &[(usize, usize, f64, f64)]) -> MarketConfig {
        MarketConfig {
            name: "toy".into(),
            areas: (0..n)
                .map(|k| Area {
                    id: format!("N{}", k + 1),
                    voltage: 1.0,
                })
                .collect(),
            producers: Vec::new(),
            suppliers: (0..n)
                .map(|k| SupplierParams {
                    id: format!("S{}", k + 1),
                    area: k,
                    c: 50.0,
                    d: 0.01,
                    beta: 0.5,
                })
                .collect(),
            lines: lines
                .iter()
                .map(|&(from, to, b, t)| Line {
                    from,
                    to,
                    susceptance: b,
                    t_max: t,
                    t_min: -t,
                })
                .collect(),
            wind_plants: Vec::new(),
            wind_correlation: Vec::new(),
            hub_area: 0,
            scenario_count: 1,
        }
    }

    #[test]
    fn two_area_flow() {
        let cfg = toy_config(2, &[(0, 1, 1000.0, f64::INFINITY)]);
        let fs = dc_flow(&[100.0, -100.0], &cfg).unwrap();
        assert!((fs.flows[0] - 100.0).abs() < 1e-12);
        assert!((fs.angles[0] - fs.angles[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_injection_is_rejected() {
        let cfg = toy_config(2, &[(0, 1, 1000.0, f64::INFINITY)]);
        assert!(matches!(dc_flow(&[1.0, 0.0], &cfg), Err(GridError::Unbalanced(_))));
    }

    #[test]
    fn disconnected_grid_is_singular() {
        let cfg = toy_config(3, &[(0, 1, 1000.0, f64::INFINITY)]);
        assert!(matches!(Network::new(&cfg), Err(GridError::Disconnected(_))));
    }

    #[test]
    fn zero_fees_give_zero_flow() {
        let cfg = toy_config(2, &[(0, 1, 1000.0, 200.0)]);
        let net = Network::new(&cfg).unwrap();
        let out = solve_tso(&[0.0, 0.0], &[0.0, 0.0], &net, 0).unwrap();
        assert!(out.flow.flows.iter().all(|f| *f == 0.0));
        assert!(out.flow.gamma.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn congested_clearing_separates_prices() {
        // Area 1 has cheap surplus, area 2 is short; a 100 MW line binds.
        let cfg = toy_config(2, &[(0, 1, 1000.0, 100.0)]);
        let net = Network::new(&cfg).unwrap();
        let out = clear_day_ahead(&net, 0, &[3000.0, 0.0], &[0.0, 0.0], &[50.0, 50.0], &[0.01, 0.01])
            .unwrap();
        assert!((out.flow.flows[0] - 100.0).abs() < 1e-9);
        assert!((out.prices.area_prices[0] - 21.0).abs() < 1e-9);
        assert!((out.prices.area_prices[1] - 49.0).abs() < 1e-9);
        assert!((out.duals.upper[0] - 28.0).abs() < 1e-9);
        let res = tso_kkt_block(&net, &out.flow, &out.prices, &out.duals);
        assert!(res.iter().all(|r| r.abs() < 1e-9), "{res:?}");
    }
}
