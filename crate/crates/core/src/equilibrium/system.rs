//! The stacked first-order conditions of all players and the transmission operator as one
//! mixed complementarity problem.
//!
//! Variable layout: one contract block `[α_ij, ε_ji, m_ij]` per producer–supplier pair, then
//! one block per scenario `[q_i, κ_i, λ_hub, W_k (k ≠ hub), γ_k, δ_k (k ≠ hub), μ⁺_l, μ⁻_l]`.
//! Line multipliers exist only for finite limits. Capacity multipliers `κ` are divided by the
//! producer's scenario weight and contract multipliers are shared by both counterparties:
//! the producer's is `d_j·m_ij` and the supplier's `b_i·m_ij`, which makes the price of an
//! untraded contract the slope-weighted mean of both sides' marginal valuations.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::solution::{Diagnostics, DualVariables, EquilibriumSolution, ProducerStrategy, SupplierStrategy};
use super::players::Profile;
use super::{EquilibriumError, Instance};
use crate::forward::ForwardPosition;
use crate::grid::{DayAheadClearing, FlowState, PriceState};
use crate::mcp::{natural_residual, Mcp};
use crate::model::MarketConfig;
use crate::uncertainty::{PlayerWeights, ScenarioSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarBlock {
    ProducerContract,
    SupplierContract,
    ContractComplementarity,
    ProducerDispatch,
    Capacity,
    HubBalance,
    TsoStationarity,
    Price,
    PowerBalance,
    LineLimits,
}

impl VarBlock {
    /// Name of the block of equations paired with variables of this kind.
    pub fn name(self) -> &'static str {
        match self {
            VarBlock::ProducerContract => "producer_contract",
            VarBlock::SupplierContract => "supplier_contract",
            VarBlock::ContractComplementarity => "contract_complementarity",
            VarBlock::ProducerDispatch => "producer_dispatch",
            VarBlock::Capacity => "capacity",
            VarBlock::HubBalance => "hub_balance",
            VarBlock::TsoStationarity => "tso_stationarity",
            VarBlock::Price => "price",
            VarBlock::PowerBalance => "power_balance",
            VarBlock::LineLimits => "line_limits",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub block: VarBlock,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
struct Layout {
    n_p: usize,
    n_c: usize,
    n_s: usize,
    n_a: usize,
    n_red: usize,
    upper_lines: Vec<usize>,
    lower_lines: Vec<usize>,
    scen_base: usize,
    scen_size: usize,
}

impl Layout {
    fn new(inst: &Instance) -> Self {
        let n_p = inst.n_producers();
        let n_c = inst.n_suppliers();
        let n_a = inst.n_areas();
        let upper_lines: Vec<usize> = (0..inst.network.lines.len())
            .filter(|&l| inst.network.lines[l].t_max.is_finite())
            .collect();
        let lower_lines: Vec<usize> = (0..inst.network.lines.len())
            .filter(|&l| inst.network.lines[l].t_min.is_finite())
            .collect();
        let n_red = n_a - 1;
        let scen_size = 2 * n_p + 1 + n_red + n_a + n_red + upper_lines.len() + lower_lines.len();
        Layout {
            n_p,
            n_c,
            n_s: inst.n_scenarios(),
            n_a,
            n_red,
            upper_lines,
            lower_lines,
            scen_base: 3 * n_p * n_c,
            scen_size,
        }
    }

    fn dim(&self) -> usize {
        self.scen_base + self.n_s * self.scen_size
    }
    fn alpha(&self, i: usize, j: usize) -> usize {
        3 * (i * self.n_c + j)
    }
    fn epsilon(&self, i: usize, j: usize) -> usize {
        self.alpha(i, j) + 1
    }
    fn mult(&self, i: usize, j: usize) -> usize {
        self.alpha(i, j) + 2
    }
    fn base(&self, s: usize) -> usize {
        self.scen_base + s * self.scen_size
    }
    fn q(&self, s: usize, i: usize) -> usize {
        self.base(s) + i
    }
    fn kappa(&self, s: usize, i: usize) -> usize {
        self.base(s) + self.n_p + i
    }
    fn hub(&self, s: usize) -> usize {
        self.base(s) + 2 * self.n_p
    }
    /// `r` indexes the non-hub areas.
    fn fee(&self, s: usize, r: usize) -> usize {
        self.hub(s) + 1 + r
    }
    fn gamma(&self, s: usize, k: usize) -> usize {
        self.hub(s) + 1 + self.n_red + k
    }
    fn angle(&self, s: usize, r: usize) -> usize {
        self.hub(s) + 1 + self.n_red + self.n_a + r
    }
    fn mu_up(&self, s: usize, u: usize) -> usize {
        self.hub(s) + 1 + 2 * self.n_red + self.n_a + u
    }
    fn mu_lo(&self, s: usize, u: usize) -> usize {
        self.mu_up(s, 0) + self.upper_lines.len() + u
    }
}

/// Assembled complementarity system with its constant Jacobian.
#[derive(Debug, Clone)]
pub struct McpSystem {
    pub instance: Instance,
    pub variables: Vec<VarInfo>,
    /// Structural nonzeros `(row, column)` of the Jacobian.
    pub sparsity: Vec<(usize, usize)>,
    lower: Vec<f64>,
    layout: Layout,
    jacobian: DMatrix<f64>,
}

/// Contract quantities, prices and per-player totals implied by the intercepts in `x`.
struct Contracts {
    quantity: Vec<Vec<f64>>,
    price: Vec<Vec<f64>>,
    producer_total: Vec<f64>,
    supplier_total: Vec<f64>,
}

impl McpSystem {
    pub fn new(inst: Instance) -> Self {
        let layout = Layout::new(&inst);
        let variables = describe(&inst, &layout);
        let lower = variables.iter().map(|v| v.lower).collect();
        let mut sys = McpSystem {
            instance: inst,
            variables,
            sparsity: Vec::new(),
            lower,
            layout,
            jacobian: DMatrix::zeros(0, 0),
        };
        // The map is affine, so unit-step differences give the exact Jacobian.
        let n = sys.layout.dim();
        let zero = vec![0.0; n];
        let f0 = sys.residual(&zero);
        let mut jac = DMatrix::zeros(n, n);
        let mut e = zero;
        for k in 0..n {
            e[k] = 1.0;
            let fk = sys.residual(&e);
            e[k] = 0.0;
            for r in 0..n {
                let v = fk[r] - f0[r];
                if v != 0.0 {
                    jac[(r, k)] = v;
                }
            }
        }
        sys.sparsity = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .filter(|&(r, c)| jac[(r, c)] != 0.0)
            .collect();
        sys.jacobian = jac;
        sys
    }

    pub fn block_of(&self, index: usize) -> VarBlock {
        self.variables[index].block
    }

    /// Per-scenario variable count.
    pub fn scenario_block_size(&self) -> usize {
        self.layout.scen_size
    }

    fn contracts(&self, x: &[f64]) -> Contracts {
        let cfg = &self.instance.config;
        let l = &self.layout;
        let mut quantity = vec![vec![0.0; l.n_c]; l.n_p];
        let mut price = vec![vec![0.0; l.n_c]; l.n_p];
        let mut producer_total = vec![0.0; l.n_p];
        let mut supplier_total = vec![0.0; l.n_c];
        for (i, p) in cfg.producers.iter().enumerate() {
            for (j, sup) in cfg.suppliers.iter().enumerate() {
                let (a, e) = (x[l.alpha(i, j)], x[l.epsilon(i, j)]);
                let q = (e - a) / (p.b + sup.d);
                quantity[i][j] = q;
                price[i][j] = e - sup.d * q;
                producer_total[i] += q;
                supplier_total[j] += q;
            }
        }
        Contracts {
            quantity,
            price,
            producer_total,
            supplier_total,
        }
    }

    fn fee(&self, x: &[f64], s: usize, k: usize) -> f64 {
        let net = &self.instance.network;
        if k == net.hub {
            0.0
        } else {
            x[self.layout.fee(s, reduced_index(net.hub, k))]
        }
    }

    fn angle(&self, x: &[f64], s: usize, k: usize) -> f64 {
        let net = &self.instance.network;
        if k == net.hub {
            0.0
        } else {
            x[self.layout.angle(s, reduced_index(net.hub, k))]
        }
    }

    /// Physical totals of one scenario: local supply, forward sales and consumption per area.
    fn area_totals(&self, x: &[f64], s: usize, ct: &Contracts) -> (Vec<f64>, Vec<f64>) {
        let inst = &self.instance;
        let n_a = self.layout.n_a;
        let mut sell = vec![0.0; n_a];
        let mut consumption = vec![0.0; n_a];
        for (i, p) in inst.config.producers.iter().enumerate() {
            sell[p.area] += ct.producer_total[i];
            consumption[p.area] += x[self.layout.q(s, i)];
        }
        for k in 0..n_a {
            consumption[k] += inst.wind[s][k]
                + ct.supplier_total[inst.supplier_of_area[k]]
                + x[self.layout.gamma(s, k)];
        }
        (sell, consumption)
    }

    /// Evaluate every stacked condition at `x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let inst = &self.instance;
        let cfg = &inst.config;
        let net = &inst.network;
        let l = &self.layout;
        let dd = inst.hub_slope;
        let (c_area, d_area) = inst.demand_by_area();
        let cmax = net.max_coefficient();
        let mut r = vec![0.0; l.dim()];
        let ct = self.contracts(x);

        let mut mc = vec![0.0; l.n_p];
        let mut mv = vec![0.0; l.n_c];
        for s in 0..l.n_s {
            let hub_price = x[l.hub(s)];
            let prices: Vec<f64> = (0..l.n_a).map(|k| hub_price + self.fee(x, s, k)).collect();
            let (sell, consumption) = self.area_totals(x, s, &ct);

            for (i, p) in cfg.producers.iter().enumerate() {
                let q = x[l.q(s, i)];
                let kappa = x[l.kappa(s, i)];
                let total = q + ct.producer_total[i];
                r[l.q(s, i)] = p.a + p.b * total + dd * q + kappa - prices[p.area];
                r[l.kappa(s, i)] = p.q_max - total;
                mc[i] += inst.weights.producers[i][s] * (dd * q + p.a + p.b * total + kappa);
            }
            for (j, sup) in cfg.suppliers.iter().enumerate() {
                let q_dc = consumption[sup.area] - ct.supplier_total[j];
                mv[j] += inst.weights.suppliers[j][s] * (prices[sup.area] + dd * q_dc);
            }

            r[l.hub(s)] = (0..l.n_a).map(|k| x[l.gamma(s, k)]).sum();
            let angles: Vec<f64> = (0..l.n_a).map(|k| self.angle(x, s, k)).collect();
            let flows = net.line_flows(&angles);
            for (rk, &k) in net.reduced.iter().enumerate() {
                let mut v: f64 = (0..l.n_a).map(|m| net.bbus[(k, m)] * self.fee(x, s, m)).sum();
                for (u, &li) in l.upper_lines.iter().enumerate() {
                    v += x[l.mu_up(s, u)] * incidence(net, li, k);
                }
                for (u, &li) in l.lower_lines.iter().enumerate() {
                    v -= x[l.mu_lo(s, u)] * incidence(net, li, k);
                }
                r[l.fee(s, rk)] = v / cmax;

                let injection: f64 = (0..l.n_a).map(|m| net.bbus[(k, m)] * angles[m]).sum();
                let forward_import = ct.supplier_total[inst.supplier_of_area[k]] - sell[k];
                r[l.angle(s, rk)] = injection + x[l.gamma(s, k)] + forward_import;
            }
            for k in 0..l.n_a {
                r[l.gamma(s, k)] = prices[k] - c_area[k] + d_area[k] * consumption[k];
            }
            for (u, &li) in l.upper_lines.iter().enumerate() {
                r[l.mu_up(s, u)] = net.lines[li].t_max - flows[li];
            }
            for (u, &li) in l.lower_lines.iter().enumerate() {
                r[l.mu_lo(s, u)] = flows[li] - net.lines[li].t_min;
            }
        }

        for (i, p) in cfg.producers.iter().enumerate() {
            let rho_sum: f64 = inst.weights.producers[i].iter().sum();
            let mc_i = mc[i] / rho_sum;
            for (j, sup) in cfg.suppliers.iter().enumerate() {
                let rho_sum_c: f64 = inst.weights.suppliers[j].iter().sum();
                let mv_j = mv[j] / rho_sum_c;
                let (q, f, m) = (ct.quantity[i][j], ct.price[i][j], x[l.mult(i, j)]);
                r[l.alpha(i, j)] = f - sup.d * q - mc_i + sup.d * m;
                r[l.epsilon(i, j)] = mv_j - f - p.b * q + p.b * m;
                r[l.mult(i, j)] = q;
            }
        }
        r
    }

    /// Pack a solution into the variable vector of this system.
    pub fn pack(&self, sol: &EquilibriumSolution) -> Result<Vec<f64>, EquilibriumError> {
        let inst = &self.instance;
        let l = &self.layout;
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(EquilibriumError::Dimension(format!("solution {what} does not match")))
            }
        };
        check(sol.producers.len() == l.n_p, "producer count")?;
        check(sol.suppliers.len() == l.n_c, "supplier count")?;
        check(sol.prices.len() == l.n_s && sol.flows.len() == l.n_s, "scenario count")?;
        check(
            sol.producers.iter().all(|p| p.alpha_row.len() == l.n_c && p.q_dp.len() == l.n_s)
                && sol.suppliers.iter().all(|s| s.epsilon_row.len() == l.n_p)
                && sol.duals.capacity.len() == l.n_p
                && sol.duals.contract.len() == l.n_p,
            "strategy shape",
        )?;
        check(
            sol.flows.iter().all(|f| f.angles.len() == l.n_a && f.gamma.len() == l.n_a)
                && sol.prices.iter().all(|p| p.wheeling_fees.len() == l.n_a)
                && sol.duals.line_upper.iter().all(|v| v.len() == inst.network.lines.len()),
            "network shape",
        )?;
        let mut x = vec![0.0; l.dim()];
        for i in 0..l.n_p {
            for j in 0..l.n_c {
                x[l.alpha(i, j)] = sol.producers[i].alpha_row[j];
                x[l.epsilon(i, j)] = sol.suppliers[j].epsilon_row[i];
                x[l.mult(i, j)] = sol.duals.contract[i][j];
            }
        }
        let hub = inst.network.hub;
        for s in 0..l.n_s {
            for i in 0..l.n_p {
                x[l.q(s, i)] = sol.producers[i].q_dp[s];
                x[l.kappa(s, i)] = sol.duals.capacity[i][s] / inst.weights.producers[i][s];
            }
            x[l.hub(s)] = sol.prices[s].hub_price;
            for (r, &k) in inst.network.reduced.iter().enumerate() {
                x[l.fee(s, r)] = sol.prices[s].wheeling_fees[k];
                x[l.angle(s, r)] = sol.flows[s].angles[k] - sol.flows[s].angles[hub];
            }
            for k in 0..l.n_a {
                x[l.gamma(s, k)] = sol.flows[s].gamma[k];
            }
            for (u, &li) in l.upper_lines.iter().enumerate() {
                x[l.mu_up(s, u)] = sol.duals.line_upper[s][li];
            }
            for (u, &li) in l.lower_lines.iter().enumerate() {
                x[l.mu_lo(s, u)] = sol.duals.line_lower[s][li];
            }
        }
        Ok(x)
    }

    /// Variable vector from a strategy profile, one clearing per scenario and weighted
    /// capacity multipliers `[i][s]`. Contract multipliers start at zero.
    pub(crate) fn seed(
        &self,
        profile: &Profile,
        cleared: &[DayAheadClearing],
        capacity: &[Vec<f64>],
    ) -> Vec<f64> {
        let inst = &self.instance;
        let l = &self.layout;
        let mut x = vec![0.0; l.dim()];
        for i in 0..l.n_p {
            for j in 0..l.n_c {
                x[l.alpha(i, j)] = profile.alpha[i][j];
                x[l.epsilon(i, j)] = profile.epsilon[j][i];
            }
        }
        let hub = inst.network.hub;
        for (s, cl) in cleared.iter().enumerate() {
            for i in 0..l.n_p {
                x[l.q(s, i)] = profile.q[i][s];
                x[l.kappa(s, i)] = capacity[i][s] / inst.weights.producers[i][s];
            }
            x[l.hub(s)] = cl.prices.hub_price;
            for (r, &k) in inst.network.reduced.iter().enumerate() {
                x[l.fee(s, r)] = cl.prices.wheeling_fees[k];
                x[l.angle(s, r)] = cl.flow.angles[k] - cl.flow.angles[hub];
            }
            for k in 0..l.n_a {
                x[l.gamma(s, k)] = cl.flow.gamma[k];
            }
            for (u, &li) in l.upper_lines.iter().enumerate() {
                x[l.mu_up(s, u)] = cl.duals.upper[li];
            }
            for (u, &li) in l.lower_lines.iter().enumerate() {
                x[l.mu_lo(s, u)] = cl.duals.lower[li];
            }
        }
        x
    }

    /// Build the full solution document from a variable vector.
    pub fn unpack(&self, x: &[f64], diagnostics: Diagnostics) -> EquilibriumSolution {
        let inst = &self.instance;
        let cfg = &inst.config;
        let net = &inst.network;
        let l = &self.layout;
        let dd = inst.hub_slope;
        let ct = self.contracts(x);
        let n_lines = net.lines.len();

        let mut flows = Vec::with_capacity(l.n_s);
        let mut prices = Vec::with_capacity(l.n_s);
        let mut q_dc = vec![vec![0.0; l.n_s]; l.n_c];
        let mut line_upper = vec![vec![0.0; n_lines]; l.n_s];
        let mut line_lower = vec![vec![0.0; n_lines]; l.n_s];
        for s in 0..l.n_s {
            let hub_price = x[l.hub(s)];
            let fees: Vec<f64> = (0..l.n_a).map(|k| self.fee(x, s, k)).collect();
            let area_prices = fees.iter().map(|w| hub_price + w).collect();
            prices.push(PriceState {
                scenario: s,
                hub_price,
                area_prices,
                wheeling_fees: fees,
            });
            let (sell, consumption) = self.area_totals(x, s, &ct);
            let angles: Vec<f64> = (0..l.n_a).map(|k| self.angle(x, s, k)).collect();
            flows.push(FlowState {
                scenario: s,
                flows: net.line_flows(&angles),
                angles,
                gamma: (0..l.n_a).map(|k| x[l.gamma(s, k)]).collect(),
                forward_import: (0..l.n_a)
                    .map(|k| ct.supplier_total[inst.supplier_of_area[k]] - sell[k])
                    .collect(),
            });
            for (j, sup) in cfg.suppliers.iter().enumerate() {
                q_dc[j][s] = consumption[sup.area] - ct.supplier_total[j];
            }
            for (u, &li) in l.upper_lines.iter().enumerate() {
                line_upper[s][li] = x[l.mu_up(s, u)];
            }
            for (u, &li) in l.lower_lines.iter().enumerate() {
                line_lower[s][li] = x[l.mu_lo(s, u)];
            }
        }
        let injections: Vec<Vec<f64>> = flows.iter().map(|f| f.gamma.clone()).collect();

        let producers = cfg
            .producers
            .iter()
            .enumerate()
            .map(|(i, p)| ProducerStrategy {
                id: p.id.clone(),
                area: p.area,
                alpha_row: (0..l.n_c).map(|j| x[l.alpha(i, j)]).collect(),
                q_dp: (0..l.n_s).map(|s| x[l.q(s, i)]).collect(),
                x: injections.clone(),
            })
            .collect();
        let suppliers = cfg
            .suppliers
            .iter()
            .enumerate()
            .map(|(j, sup)| SupplierStrategy {
                id: sup.id.clone(),
                area: sup.area,
                epsilon_row: (0..l.n_p).map(|i| x[l.epsilon(i, j)]).collect(),
                q_dc: q_dc[j].clone(),
                z: injections.clone(),
            })
            .collect();

        let rho_p = &inst.weights.producers;
        let rho_c = &inst.weights.suppliers;
        let duals = DualVariables {
            capacity: (0..l.n_p)
                .map(|i| (0..l.n_s).map(|s| rho_p[i][s] * x[l.kappa(s, i)]).collect())
                .collect(),
            contract: (0..l.n_p)
                .map(|i| (0..l.n_c).map(|j| x[l.mult(i, j)]).collect())
                .collect(),
            producer_contract: (0..l.n_p)
                .map(|i| {
                    let rs: f64 = rho_p[i].iter().sum();
                    (0..l.n_c)
                        .map(|j| rs * cfg.suppliers[j].d * x[l.mult(i, j)])
                        .collect()
                })
                .collect(),
            supplier_contract: (0..l.n_c)
                .map(|j| {
                    let rs: f64 = rho_c[j].iter().sum();
                    (0..l.n_p)
                        .map(|i| rs * cfg.producers[i].b * x[l.mult(i, j)])
                        .collect()
                })
                .collect(),
            hub_link: cfg
                .producers
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    (0..l.n_s)
                        .map(|s| {
                            let q = x[l.q(s, i)];
                            (0..l.n_a)
                                .map(|k| {
                                    let own = if k == p.area { 1.0 } else { 0.0 };
                                    let d_k = cfg.suppliers[inst.supplier_of_area[k]].d;
                                    rho_p[i][s] * q * (own - dd / d_k)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            producer_balance: (0..l.n_p)
                .map(|i| (0..l.n_s).map(|s| rho_p[i][s] * dd * x[l.q(s, i)]).collect())
                .collect(),
            supplier_balance: (0..l.n_c)
                .map(|j| (0..l.n_s).map(|s| -rho_c[j][s] * dd * q_dc[j][s]).collect())
                .collect(),
            line_upper,
            line_lower,
        };

        EquilibriumSolution {
            config_name: cfg.name.clone(),
            config_hash: cfg.content_hash(),
            area_ids: cfg.areas.iter().map(|a| a.id.clone()).collect(),
            scenarios: inst.scenarios.clone(),
            weights: inst.weights.clone(),
            producers,
            suppliers,
            forward: ForwardPosition {
                quantity: ct.quantity,
                price: ct.price,
            },
            flows,
            prices,
            duals,
            diagnostics,
        }
    }

    /// Per-block max-norm of the min-function residual at `x`.
    pub fn report(&self, x: &[f64]) -> KktReport {
        let f = self.residual(x);
        let mut blocks: BTreeMap<String, f64> = BTreeMap::new();
        for v in &self.variables {
            blocks.entry(v.block.name().to_string()).or_insert(0.0);
        }
        for (k, v) in self.variables.iter().enumerate() {
            let res = natural_residual(x[k], v.lower, f[k]);
            let e = blocks.get_mut(v.block.name()).expect("block registered");
            *e = e.max(res);
        }
        let overall = blocks.values().copied().fold(0.0, f64::max);
        KktReport { overall, blocks }
    }
}

impl Mcp for McpSystem {
    fn dim(&self) -> usize {
        self.layout.dim()
    }
    fn lower(&self) -> &[f64] {
        &self.lower
    }
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        McpSystem::residual(self, x)
    }
    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.jacobian.clone()
    }
}

fn reduced_index(hub: usize, k: usize) -> usize {
    if k < hub {
        k
    } else {
        k - 1
    }
}

/// `c_l·A_lk`: flow coefficient with the sign of area k's end of line `l`.
fn incidence(net: &crate::grid::Network, l: usize, k: usize) -> f64 {
    let line = &net.lines[l];
    if k == line.from {
        line.coefficient
    } else if k == line.to {
        -line.coefficient
    } else {
        0.0
    }
}

fn describe(inst: &Instance, l: &Layout) -> Vec<VarInfo> {
    let cfg = &inst.config;
    let mut vars = vec![
        VarInfo {
            name: String::new(),
            block: VarBlock::Price,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        };
        l.dim()
    ];
    let mut set = |idx: usize, name: String, block: VarBlock, nonneg: bool| {
        vars[idx] = VarInfo {
            name,
            block,
            lower: if nonneg { 0.0 } else { f64::NEG_INFINITY },
            upper: f64::INFINITY,
        };
    };
    for (i, p) in cfg.producers.iter().enumerate() {
        for (j, c) in cfg.suppliers.iter().enumerate() {
            set(l.alpha(i, j), format!("alpha[{},{}]", p.id, c.id), VarBlock::ProducerContract, false);
            set(l.epsilon(i, j), format!("epsilon[{},{}]", c.id, p.id), VarBlock::SupplierContract, false);
            set(l.mult(i, j), format!("m[{},{}]", p.id, c.id), VarBlock::ContractComplementarity, true);
        }
    }
    let area = |k: usize| cfg.areas[k].id.clone();
    for s in 0..l.n_s {
        for (i, p) in cfg.producers.iter().enumerate() {
            set(l.q(s, i), format!("q[{},s{}]", p.id, s + 1), VarBlock::ProducerDispatch, true);
            set(l.kappa(s, i), format!("kappa[{},s{}]", p.id, s + 1), VarBlock::Capacity, true);
        }
        set(l.hub(s), format!("lambda_hub[s{}]", s + 1), VarBlock::HubBalance, false);
        for (r, &k) in inst.network.reduced.iter().enumerate() {
            set(l.fee(s, r), format!("W[{},s{}]", area(k), s + 1), VarBlock::TsoStationarity, false);
            set(l.angle(s, r), format!("delta[{},s{}]", area(k), s + 1), VarBlock::PowerBalance, false);
        }
        for k in 0..l.n_a {
            set(l.gamma(s, k), format!("gamma[{},s{}]", area(k), s + 1), VarBlock::Price, false);
        }
        for (u, &li) in l.upper_lines.iter().enumerate() {
            set(l.mu_up(s, u), format!("mu_upper[line{},s{}]", li + 1, s + 1), VarBlock::LineLimits, true);
        }
        for (u, &li) in l.lower_lines.iter().enumerate() {
            set(l.mu_lo(s, u), format!("mu_lower[line{},s{}]", li + 1, s + 1), VarBlock::LineLimits, true);
        }
    }
    vars
}

/// Build the complementarity system for a market, scenario set and weight profile.
pub fn assemble_mcp(
    config: &MarketConfig,
    scenarios: &ScenarioSet,
    weights: &PlayerWeights,
) -> Result<McpSystem, EquilibriumError> {
    Ok(McpSystem::new(Instance::new(config, scenarios, weights)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub overall: f64,
    pub blocks: BTreeMap<String, f64>,
}

/// Residual of the stacked optimality conditions at a solution, overall and per block.
pub fn kkt_residual(
    solution: &EquilibriumSolution,
    system: &McpSystem,
) -> Result<KktReport, EquilibriumError> {
    let x = system.pack(solution)?;
    Ok(system.report(&x))
}
