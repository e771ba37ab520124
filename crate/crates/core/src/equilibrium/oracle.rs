//! Exhaustive-search equilibrium for very small markets, written independently of the
//! complementarity formulation so it can cross-check it.
//!
//! Forward intercepts live on a uniform grid. Given its intercepts, a producer's day-ahead
//! output has a closed form, and wheeling fees follow from a closed-form clearing of at most
//! two areas joined by one line. Players best-respond in turn until nothing moves.

use crate::model::MarketConfig;
use crate::uncertainty::{PlayerWeights, ScenarioSet};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("no pure fixed point on the grid after {rounds} rounds; refine the grid")]
    NoFixedPoint { rounds: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    /// Spacing of intercept grid points ($/MWh).
    pub step: f64,
    pub min: f64,
    pub max: f64,
    pub max_rounds: usize,
}

impl OracleGrid {
    fn points(&self) -> usize {
        ((self.max - self.min) / self.step).round() as usize + 1
    }
    fn value(&self, k: usize) -> f64 {
        self.min + k as f64 * self.step
    }
    fn snap(&self, v: f64) -> usize {
        (((v - self.min) / self.step).round().max(0.0) as usize).min(self.points() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `[i][j]`
    pub alpha: Vec<Vec<f64>>,
    /// `[j][i]`
    pub epsilon: Vec<Vec<f64>>,
    /// `[i][s]`
    pub q_dp: Vec<Vec<f64>>,
    /// Contract quantities `[i][j]`.
    pub contracts: Vec<Vec<f64>>,
    /// `[s][k]`
    pub wheeling_fees: Vec<Vec<f64>>,
    /// `[s][k]`
    pub area_prices: Vec<Vec<f64>>,
    pub rounds: usize,
}

/// Largest number of joint payoff evaluations per round.
const MAX_EVALUATIONS: f64 = 1e7;

struct State<'a> {
    cfg: &'a MarketConfig,
    wind: &'a [Vec<f64>],
    weights: &'a PlayerWeights,
    slope: f64,
    alpha: Vec<Vec<usize>>,
    epsilon: Vec<Vec<usize>>,
    q: Vec<Vec<f64>>,
    fees: Vec<Vec<f64>>,
}

impl State<'_> {
    fn quantity(&self, i: usize, j: usize, alpha: f64, epsilon: f64) -> f64 {
        ((epsilon - alpha) / (self.cfg.producers[i].b + self.cfg.suppliers[j].d)).max(0.0)
    }

    fn contract(&self, grid: &OracleGrid, i: usize, j: usize) -> f64 {
        self.quantity(i, j, grid.value(self.alpha[i][j]), grid.value(self.epsilon[j][i]))
    }

    fn total_contracted(&self, grid: &OracleGrid) -> f64 {
        let mut t = 0.0;
        for i in 0..self.cfg.producers.len() {
            for j in 0..self.cfg.suppliers.len() {
                t += self.contract(grid, i, j);
            }
        }
        t
    }

    /// Conjectured hub price: every area's inverse demand at its fee, all supply pooled.
    fn hub_price(&self, grid: &OracleGrid, s: usize) -> f64 {
        let mut acc = 0.0;
        for sup in &self.cfg.suppliers {
            acc += (sup.c - self.fees[s][sup.area]) / sup.d;
        }
        let output: f64 = self.q.iter().map(|r| r[s]).sum();
        let wind: f64 = self.wind[s].iter().sum();
        self.slope * (acc - output - wind - self.total_contracted(grid))
    }
}

/// Iterated exhaustive best response over intercept grids.
pub fn brute_force_nash(
    config: &MarketConfig,
    scenarios: &ScenarioSet,
    weights: &PlayerWeights,
    grid: &OracleGrid,
) -> Result<OracleResult, OracleError> {
    let (n_p, n_c, n_a, n_s) = (
        config.producers.len(),
        config.suppliers.len(),
        config.areas.len(),
        scenarios.outputs.len(),
    );
    if n_p > 2 || n_c > 2 || n_a > 2 || n_s > 2 {
        return Err(OracleError::TooLarge(format!(
            "{n_p} producers, {n_c} suppliers, {n_a} areas, {n_s} scenarios (limit 2 each)"
        )));
    }
    if n_a == 2 && config.lines.len() != 1 {
        return Err(OracleError::Unsupported("two areas need exactly one line".into()));
    }
    if n_c != n_a {
        return Err(OracleError::Unsupported("one supplier per area is required".into()));
    }
    if !(grid.step > 0.0 && grid.max > grid.min) {
        return Err(OracleError::Unsupported("grid needs a positive step and max > min".into()));
    }
    let points = grid.points() as f64;
    let per_round = n_p as f64 * points.powi(n_c as i32) + n_c as f64 * points.powi(n_p as i32);
    if per_round * n_s as f64 > MAX_EVALUATIONS {
        return Err(OracleError::TooLarge(format!("{per_round:.0} evaluations per round")));
    }

    let mut st = State {
        cfg: config,
        wind: &scenarios.outputs,
        weights,
        slope: 1.0 / config.suppliers.iter().map(|s| 1.0 / s.d).sum::<f64>(),
        alpha: config.producers.iter().map(|p| vec![grid.snap(p.a); n_c]).collect(),
        epsilon: config.suppliers.iter().map(|s| vec![grid.snap(s.c); n_p]).collect(),
        q: vec![vec![0.0; n_s]; n_p],
        fees: vec![vec![0.0; n_a]; n_s],
    };

    for round in 1..=grid.max_rounds {
        let mut moved = false;
        let mut drift: f64 = 0.0;
        for i in 0..n_p {
            let (alpha, q) = producer_search(&st, grid, i);
            moved |= alpha != st.alpha[i];
            for s in 0..n_s {
                drift = drift.max((q[s] - st.q[i][s]).abs());
            }
            st.alpha[i] = alpha;
            st.q[i] = q;
        }
        for j in 0..n_c {
            let eps = supplier_search(&st, grid, j);
            moved |= eps != st.epsilon[j];
            st.epsilon[j] = eps;
        }
        for s in 0..n_s {
            let fees = clear(&st, grid, s).0;
            for k in 0..n_a {
                drift = drift.max((fees[k] - st.fees[s][k]).abs());
            }
            st.fees[s] = fees;
        }
        if !moved && drift < 1e-11 {
            let contracts = (0..n_p)
                .map(|i| (0..n_c).map(|j| st.contract(grid, i, j)).collect())
                .collect();
            let area_prices = (0..n_s).map(|s| clear(&st, grid, s).1).collect();
            return Ok(OracleResult {
                alpha: st.alpha.iter().map(|r| r.iter().map(|&k| grid.value(k)).collect()).collect(),
                epsilon: st.epsilon.iter().map(|r| r.iter().map(|&k| grid.value(k)).collect()).collect(),
                q_dp: st.q.clone(),
                contracts,
                wheeling_fees: st.fees.clone(),
                area_prices,
                rounds: round,
            });
        }
    }
    Err(OracleError::NoFixedPoint {
        rounds: grid.max_rounds,
    })
}

/// Every combination of `n` grid indices.
fn combinations(points: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = points.pow(n as u32);
    (0..total).map(move |mut code| {
        let mut v = vec![0; n];
        for slot in v.iter_mut() {
            *slot = code % points;
            code /= points;
        }
        v
    })
}

fn producer_search(st: &State, grid: &OracleGrid, i: usize) -> (Vec<usize>, Vec<f64>) {
    let p = &st.cfg.producers[i];
    let n_c = st.cfg.suppliers.len();
    let n_s = st.wind.len();
    let rho = &st.weights.producers[i];
    let own_now: f64 = (0..n_c).map(|j| st.contract(grid, i, j)).sum();
    // Hub price with this producer's output and contracts removed.
    let base: Vec<f64> = (0..n_s)
        .map(|s| st.hub_price(grid, s) + st.slope * (st.q[i][s] + own_now))
        .collect();

    let evaluate = |alpha: &[usize]| -> Option<(f64, Vec<f64>)> {
        let mut qf = 0.0;
        let mut revenue = 0.0;
        for j in 0..n_c {
            let e = grid.value(st.epsilon[j][i]);
            let qc = st.quantity(i, j, grid.value(alpha[j]), e);
            qf += qc;
            revenue += (e - st.cfg.suppliers[j].d * qc) * qc;
        }
        if qf > p.q_max {
            return None;
        }
        let mut value = 0.0;
        let mut q = vec![0.0; n_s];
        for s in 0..n_s {
            let own_price0 = base[s] + st.fees[s][p.area];
            let qs = ((own_price0 - p.a - (st.slope + p.b) * qf) / (2.0 * st.slope + p.b))
                .clamp(0.0, p.q_max - qf);
            let total = qs + qf;
            let price = own_price0 - st.slope * total;
            value += rho[s] * (price * qs + revenue - p.a * total - 0.5 * p.b * total * total);
            q[s] = qs;
        }
        Some((value, q))
    };

    let mut best = (st.alpha[i].clone(), evaluate(&st.alpha[i]));
    for cand in combinations(grid.points(), n_c) {
        if let Some((v, q)) = evaluate(&cand) {
            let better = match &best.1 {
                Some((bv, _)) => v > bv + 1e-9 * bv.abs().max(1.0),
                None => true,
            };
            if better {
                best = (cand, Some((v, q)));
            }
        }
    }
    let q = best.1.map(|b| b.1).unwrap_or_else(|| vec![0.0; n_s]);
    (best.0, q)
}

fn supplier_search(st: &State, grid: &OracleGrid, j: usize) -> Vec<usize> {
    let sup = &st.cfg.suppliers[j];
    let n_p = st.cfg.producers.len();
    let n_s = st.wind.len();
    let rho = &st.weights.suppliers[j];
    let own_now: f64 = (0..n_p).map(|i| st.contract(grid, i, j)).sum();
    let hub: Vec<f64> = (0..n_s).map(|s| st.hub_price(grid, s)).collect();

    let evaluate = |eps: &[usize]| -> f64 {
        let mut purchases = 0.0;
        let mut cost = 0.0;
        for i in 0..n_p {
            let e = grid.value(eps[i]);
            let qc = st.quantity(i, j, grid.value(st.alpha[i][j]), e);
            purchases += qc;
            cost += (e - sup.d * qc) * qc;
        }
        let mut value = 0.0;
        for s in 0..n_s {
            let price = hub[s] - st.slope * (purchases - own_now) + st.fees[s][sup.area];
            let total = (sup.c - price) / sup.d;
            value += rho[s] * (sup.c * total - 0.5 * sup.d * total * total - price * (total - purchases) - cost);
        }
        value
    };

    let mut best = (st.epsilon[j].clone(), evaluate(&st.epsilon[j]));
    for cand in combinations(grid.points(), n_p) {
        let v = evaluate(&cand);
        if v > best.1 + 1e-9 * best.1.abs().max(1.0) {
            best = (cand, v);
        }
    }
    best.0
}

/// Welfare-maximizing dispatch of one scenario; returns (fees, area prices).
fn clear(st: &State, grid: &OracleGrid, s: usize) -> (Vec<f64>, Vec<f64>) {
    let cfg = st.cfg;
    let n_a = cfg.areas.len();
    let mut supply = st.wind[s].clone();
    for (i, p) in cfg.producers.iter().enumerate() {
        let qf: f64 = (0..cfg.suppliers.len()).map(|j| st.contract(grid, i, j)).sum();
        supply[p.area] += st.q[i][s] + qf;
    }
    let demand = |k: usize| {
        let sup = cfg.suppliers.iter().find(|x| x.area == k).expect("supplier per area");
        (sup.c, sup.d)
    };
    let prices: Vec<f64> = if n_a == 1 {
        let (c, d) = demand(0);
        vec![c - d * supply[0]]
    } else {
        let line = &cfg.lines[0];
        let (from, to) = (line.from, line.to);
        let (cf, df) = demand(from);
        let (ct, dt) = demand(to);
        // Common price without congestion, then the export it implies from `from`.
        let common = (cf / df + ct / dt - supply[from] - supply[to]) / (1.0 / df + 1.0 / dt);
        let export = supply[from] - (cf - common) / df;
        let flow = export.clamp(line.t_min, line.t_max);
        let mut p = vec![0.0; 2];
        p[from] = cf - df * (supply[from] - flow);
        p[to] = ct - dt * (supply[to] + flow);
        p
    };
    let hub = prices[cfg.hub_area];
    (prices.iter().map(|p| p - hub).collect(), prices)
}
