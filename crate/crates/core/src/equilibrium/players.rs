//! Payoffs and best responses of producers and suppliers.

use nalgebra::DMatrix;

use super::{EquilibriumError, Instance};
use crate::forward::ForwardPosition;
use crate::model::MarketConfig;
use crate::qp::QpProblem;

/// Strategy profile plus the wheeling fees every player takes as given.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Profile {
    /// `[i][j]`
    pub alpha: Vec<Vec<f64>>,
    /// `[j][i]`
    pub epsilon: Vec<Vec<f64>>,
    /// Day-ahead output `[i][s]`.
    pub q: Vec<Vec<f64>>,
    /// Wheeling fees `[s][k]`.
    pub fees: Vec<Vec<f64>>,
}

impl Profile {
    pub fn quantity(&self, inst: &Instance, i: usize, j: usize) -> f64 {
        let b = inst.config.producers[i].b;
        let d = inst.config.suppliers[j].d;
        (self.epsilon[j][i] - self.alpha[i][j]) / (b + d)
    }

    pub fn position(&self, inst: &Instance) -> ForwardPosition {
        let (n_p, n_c) = (inst.n_producers(), inst.n_suppliers());
        let mut pos = ForwardPosition::zeros(n_p, n_c);
        for i in 0..n_p {
            for j in 0..n_c {
                let q = self.quantity(inst, i, j);
                pos.quantity[i][j] = q;
                pos.price[i][j] = self.epsilon[j][i] - inst.config.suppliers[j].d * q;
            }
        }
        pos
    }

    /// Hub price per scenario implied by inverse demand in every area at the given fees.
    pub fn hub_prices(&self, inst: &Instance) -> Vec<f64> {
        let pos = self.position(inst);
        let contracted: f64 = pos.quantity.iter().flatten().sum();
        (0..inst.n_scenarios())
            .map(|s| {
                let mut acc = 0.0;
                for (k, &j) in inst.supplier_of_area.iter().enumerate() {
                    let sup = &inst.config.suppliers[j];
                    acc += (sup.c - self.fees[s][k]) / sup.d;
                }
                let output: f64 = self.q.iter().map(|row| row[s]).sum();
                let wind: f64 = inst.wind[s].iter().sum();
                inst.hub_slope * (acc - output - wind - contracted)
            })
            .collect()
    }
}

/// Expected profit of producer `i`: day-ahead sales at its area price, contract revenue and
/// quadratic production cost of the combined output.
pub fn producer_profit(
    config: &MarketConfig,
    i: usize,
    q_dp: &[f64],
    contracts: &[(f64, f64)],
    area_prices: &[f64],
    weights: &[f64],
) -> f64 {
    let p = &config.producers[i];
    let contract_q: f64 = contracts.iter().map(|c| c.0).sum();
    let contract_revenue: f64 = contracts.iter().map(|(q, f)| q * f).sum();
    q_dp.iter()
        .zip(area_prices)
        .zip(weights)
        .map(|((&q, &price), &rho)| {
            let total = q + contract_q;
            rho * (price * q + contract_revenue - p.a * total - 0.5 * p.b * total * total)
        })
        .sum()
}

/// Expected utility of supplier `j`: consumption value less day-ahead and contract payments.
pub fn supplier_utility(
    config: &MarketConfig,
    j: usize,
    q_dc: &[f64],
    contracts: &[(f64, f64)],
    area_prices: &[f64],
    weights: &[f64],
) -> f64 {
    let c = &config.suppliers[j];
    let contract_q: f64 = contracts.iter().map(|x| x.0).sum();
    let contract_cost: f64 = contracts.iter().map(|(q, f)| q * f).sum();
    q_dc.iter()
        .zip(area_prices)
        .zip(weights)
        .map(|((&q, &price), &rho)| {
            let total = q + contract_q;
            rho * (c.c * total - 0.5 * c.d * total * total - price * q - contract_cost)
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct ProducerResponse {
    pub q_dp: Vec<f64>,
    /// Contract quantity toward each supplier.
    pub contracts: Vec<f64>,
    pub alpha_row: Vec<f64>,
    /// Capacity multipliers divided by the scenario weight.
    pub capacity_duals: Vec<f64>,
    pub profit: f64,
    pub kkt_residual: f64,
    /// Smallest eigenvalue of the negated objective Hessian (positive means strictly concave).
    pub curvature: f64,
}

#[derive(Debug, Clone)]
pub struct SupplierResponse {
    /// Contract quantity toward each producer.
    pub contracts: Vec<f64>,
    pub epsilon_row: Vec<f64>,
    pub utility: f64,
    pub kkt_residual: f64,
    pub curvature: f64,
}

/// Own-variable QP of producer `i`: `x = [q_s for each scenario, Q_j for each supplier]`.
pub(crate) fn producer_qp(inst: &Instance, i: usize, profile: &Profile) -> QpProblem {
    let p = &inst.config.producers[i];
    let n_s = inst.n_scenarios();
    let n_c = inst.n_suppliers();
    let n = n_s + n_c;
    let rho = &inst.weights.producers[i];
    let rho_sum: f64 = rho.iter().sum();
    let dd = inst.hub_slope;

    let pos = profile.position(inst);
    let own_contracts = pos.producer_total(i);
    let hub = profile.hub_prices(inst);

    let mut h = DMatrix::zeros(n, n);
    let mut lin = vec![0.0; n];
    for s in 0..n_s {
        // Hub price with this producer's own output removed.
        let base = hub[s] + dd * (profile.q[i][s] + own_contracts);
        let price0 = base + profile.fees[s][p.area];
        lin[s] = -rho[s] * (price0 - p.a);
        h[(s, s)] = rho[s] * (2.0 * dd + p.b);
        for j in 0..n_c {
            h[(s, n_s + j)] = rho[s] * (dd + p.b);
            h[(n_s + j, s)] = rho[s] * (dd + p.b);
        }
    }
    for j in 0..n_c {
        let sup = &inst.config.suppliers[j];
        lin[n_s + j] = -rho_sum * (profile.epsilon[j][i] - p.a);
        for k in 0..n_c {
            h[(n_s + j, n_s + k)] = rho_sum * p.b;
        }
        h[(n_s + j, n_s + j)] += 2.0 * rho_sum * sup.d;
    }
    let mut qp = QpProblem::new(h, lin);
    for s in 0..n_s {
        let mut row = vec![0.0; n];
        row[s] = 1.0;
        row[n_s..].iter_mut().for_each(|v| *v = 1.0);
        qp.add_le(row, p.q_max);
    }
    for k in 0..n {
        let mut row = vec![0.0; n];
        row[k] = -1.0;
        qp.add_le(row, 0.0);
    }
    qp
}

/// Best response of producer `i` to the rest of `profile`. Profit at zero own quantities is
/// zero, so the negated QP objective is the expected profit.
pub(crate) fn producer_best_response_on(
    inst: &Instance,
    i: usize,
    profile: &Profile,
) -> Result<ProducerResponse, EquilibriumError> {
    let p = &inst.config.producers[i];
    let n_s = inst.n_scenarios();
    let qp = producer_qp(inst, i, profile);
    let curvature = qp.min_hessian_eigenvalue();
    let sol = qp.solve().map_err(|source| EquilibriumError::BestResponse {
        player: p.id.clone(),
        source,
    })?;
    let kkt = qp.kkt_residual(&sol);
    let q_dp: Vec<f64> = sol.x[..n_s].iter().map(|v| v.max(0.0)).collect();
    let contracts: Vec<f64> = sol.x[n_s..].iter().map(|v| v.max(0.0)).collect();
    let alpha_row = contracts
        .iter()
        .enumerate()
        .map(|(j, &q)| profile.epsilon[j][i] - (p.b + inst.config.suppliers[j].d) * q)
        .collect();
    let capacity_duals = (0..n_s)
        .map(|s| sol.multipliers[s] / inst.weights.producers[i][s])
        .collect();
    Ok(ProducerResponse {
        profit: -sol.objective,
        q_dp,
        contracts,
        alpha_row,
        capacity_duals,
        kkt_residual: kkt,
        curvature,
    })
}

/// Own-variable QP of supplier `j`: `x = [Q_i for each producer]`, with the utility it
/// would get from buying nothing forward (the QP objective omits this constant).
pub(crate) fn supplier_qp(inst: &Instance, j: usize, profile: &Profile) -> (QpProblem, f64) {
    let sup = &inst.config.suppliers[j];
    let n_p = inst.n_producers();
    let n_s = inst.n_scenarios();
    let rho = &inst.weights.suppliers[j];
    let rho_sum: f64 = rho.iter().sum();
    let dd = inst.hub_slope;
    let pos = profile.position(inst);
    let purchases = pos.supplier_total(j);
    let hub = profile.hub_prices(inst);

    // Marginal value of contracted power at zero purchases, averaged over scenarios.
    let mut value0 = 0.0;
    let mut utility0 = 0.0;
    for s in 0..n_s {
        let price0 = hub[s] + profile.fees[s][sup.area] + dd * purchases;
        value0 += rho[s] * (price0 + dd * (sup.c - price0) / sup.d);
        let t0 = (sup.c - price0) / sup.d;
        utility0 += rho[s] * (sup.c * t0 - 0.5 * sup.d * t0 * t0 - price0 * t0);
    }
    let curvature = rho_sum * (2.0 * dd - dd * dd / sup.d);
    let mut h = DMatrix::from_element(n_p, n_p, curvature);
    let mut lin = vec![0.0; n_p];
    for (i, p) in inst.config.producers.iter().enumerate() {
        h[(i, i)] += 2.0 * rho_sum * p.b;
        lin[i] = -(value0 - rho_sum * profile.alpha[i][j]);
    }
    let mut qp = QpProblem::new(h, lin);
    for i in 0..n_p {
        let mut row = vec![0.0; n_p];
        row[i] = -1.0;
        qp.add_le(row, 0.0);
    }
    (qp, utility0)
}

pub(crate) fn supplier_best_response_on(
    inst: &Instance,
    j: usize,
    profile: &Profile,
) -> Result<SupplierResponse, EquilibriumError> {
    let sup = &inst.config.suppliers[j];
    let (qp, utility0) = supplier_qp(inst, j, profile);
    let curvature = qp.min_hessian_eigenvalue();
    let sol = qp.solve().map_err(|source| EquilibriumError::BestResponse {
        player: sup.id.clone(),
        source,
    })?;
    let kkt = qp.kkt_residual(&sol);
    let contracts: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
    let epsilon_row = contracts
        .iter()
        .enumerate()
        .map(|(i, &q)| profile.alpha[i][j] + (inst.config.producers[i].b + sup.d) * q)
        .collect();
    Ok(SupplierResponse {
        utility: utility0 - sol.objective,
        contracts,
        epsilon_row,
        kkt_residual: kkt,
        curvature,
    })
}

/// Best response of producer `i` with every rival strategy and the wheeling fees of
/// `solution` held fixed.
pub fn producer_best_response(
    inst: &Instance,
    i: usize,
    solution: &super::EquilibriumSolution,
) -> Result<ProducerResponse, EquilibriumError> {
    producer_best_response_on(inst, i, &solution.profile())
}

/// Best response of supplier `j` with every rival strategy and the wheeling fees of
/// `solution` held fixed.
pub fn supplier_best_response(
    inst: &Instance,
    j: usize,
    solution: &super::EquilibriumSolution,
) -> Result<SupplierResponse, EquilibriumError> {
    supplier_best_response_on(inst, j, &solution.profile())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bundled_pjm5_case;

    #[test]
    fn producer_profit_single_scenario() {
        let cfg = bundled_pjm5_case();
        let v = producer_profit(&cfg, 0, &[100.0], &[], &[50.0], &[1.0]);
        assert!((v - 2915.0).abs() < 1e-9);
        assert_eq!(producer_profit(&cfg, 0, &[0.0], &[(0.0, 40.0)], &[50.0], &[1.0]), 0.0);
    }

    #[test]
    fn supplier_utility_single_scenario() {
        let cfg = bundled_pjm5_case();
        let v = supplier_utility(&cfg, 0, &[200.0], &[], &[50.0], &[1.0]);
        assert!((v - 2900.0).abs() < 1e-9);
    }

    #[test]
    fn contract_at_day_ahead_price_is_profit_neutral() {
        let cfg = bundled_pjm5_case();
        let base = producer_profit(&cfg, 0, &[100.0], &[], &[50.0], &[1.0]);
        let hedged = producer_profit(&cfg, 0, &[60.0], &[(40.0, 50.0)], &[50.0], &[1.0]);
        assert!((base - hedged).abs() < 1e-9);
        let base = supplier_utility(&cfg, 0, &[200.0], &[], &[50.0], &[1.0]);
        let hedged = supplier_utility(&cfg, 0, &[150.0], &[(50.0, 50.0)], &[50.0], &[1.0]);
        assert!((base - hedged).abs() < 1e-9);
    }
}
