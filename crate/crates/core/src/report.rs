//! Tab-separated views of a solution document. Every table is computed from the solution alone.

use crate::equilibrium::EquilibriumSolution;
use crate::forward::{aggregate_positions, PlayerAggregate};

/// Marker written where a quantity-weighted average is undefined.
pub const UNDEFINED: &str = "n/a";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.4}"))
}

fn uniform_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn weighted_mean(values: impl Iterator<Item = f64>, weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    values.zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

/// Contracted share of each producer's expected output: `Q / (Q + mean day-ahead output)`.
pub fn producer_forward_ratios(sol: &EquilibriumSolution) -> Vec<Option<f64>> {
    sol.producers
        .iter()
        .enumerate()
        .map(|(i, p)| ratio(sol.forward.producer_total(i), uniform_mean(&p.q_dp)))
        .collect()
}

/// Contracted share of each supplier's expected consumption.
pub fn supplier_forward_ratios(sol: &EquilibriumSolution) -> Vec<Option<f64>> {
    sol.suppliers
        .iter()
        .enumerate()
        .map(|(j, c)| ratio(sol.forward.supplier_total(j), uniform_mean(&c.q_dc)))
        .collect()
}

fn ratio(forward: f64, day_ahead: f64) -> Option<f64> {
    let total = forward + day_ahead;
    (total.abs() > 1e-9).then(|| forward / total)
}

/// System-wide forward and day-ahead price comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceComparison {
    pub contracted: f64,
    /// Quantity-weighted average price of all contracts; `None` without contracts.
    pub contract_price: Option<f64>,
    /// Mean over every player of its concern-weighted expected local area price.
    pub day_ahead_price: f64,
}

/// Concern-weighted expected price of `area` under one player's scenario weights.
pub fn concern_weighted_price(sol: &EquilibriumSolution, area: usize, weights: &[f64]) -> f64 {
    weighted_mean(sol.prices.iter().map(|p| p.area_prices[area]), weights)
}

pub fn price_comparison(sol: &EquilibriumSolution) -> PriceComparison {
    let summary = aggregate_positions(&sol.forward);
    let contracted: f64 = summary.producers.iter().map(|a| a.total).sum();
    let revenue: f64 = summary
        .producers
        .iter()
        .filter_map(|a| a.average_price.map(|p| p * a.total))
        .sum();
    let local: Vec<f64> = sol
        .producers
        .iter()
        .zip(&sol.weights.producers)
        .map(|(p, w)| concern_weighted_price(sol, p.area, w))
        .chain(
            sol.suppliers
                .iter()
                .zip(&sol.weights.suppliers)
                .map(|(c, w)| concern_weighted_price(sol, c.area, w)),
        )
        .collect();
    PriceComparison {
        contracted,
        contract_price: (contracted > 1e-9).then(|| revenue / contracted),
        day_ahead_price: local.iter().sum::<f64>() / local.len() as f64,
    }
}

/// One-line text form of [`price_comparison`].
pub fn price_comparison_table(sol: &EquilibriumSolution) -> String {
    let pc = price_comparison(sol);
    format!(
        "contracted_mw\tavg_contract_price\tavg_day_ahead_price\n{:.4}\t{}\t{:.4}\n",
        pc.contracted,
        fmt_opt(pc.contract_price),
        pc.day_ahead_price
    )
}

fn aggregate_rows(ids: impl Iterator<Item = (String, String)>, aggs: &[PlayerAggregate]) -> String {
    let mut out = String::new();
    for ((id, area), a) in ids.zip(aggs) {
        out.push_str(&format!("{id}\t{area}\t{:.4}\t{}\n", a.total, fmt_opt(a.average_price)));
    }
    out
}

/// Total contract quantity and weighted average contract price per producer.
pub fn producer_table(sol: &EquilibriumSolution) -> String {
    let summary = aggregate_positions(&sol.forward);
    let ids = sol.producers.iter().map(|p| (p.id.clone(), sol.area_ids[p.area].clone()));
    format!(
        "producer\tarea\tcontract_mw\tavg_contract_price\n{}",
        aggregate_rows(ids, &summary.producers)
    )
}

/// Total contract quantity and weighted average contract price per supplier.
pub fn supplier_table(sol: &EquilibriumSolution) -> String {
    let summary = aggregate_positions(&sol.forward);
    let ids = sol.suppliers.iter().map(|c| (c.id.clone(), sol.area_ids[c.area].clone()));
    format!(
        "supplier\tarea\tcontract_mw\tavg_contract_price\n{}",
        aggregate_rows(ids, &summary.suppliers)
    )
}

/// Forward quantity, mean day-ahead quantity and contracted share for every player.
pub fn forward_ratio_table(sol: &EquilibriumSolution) -> String {
    let mut out = String::from("player\trole\tforward_mw\tmean_day_ahead_mw\tforward_ratio\n");
    let pr = producer_forward_ratios(sol);
    for (i, p) in sol.producers.iter().enumerate() {
        out.push_str(&format!(
            "{}\tproducer\t{:.4}\t{:.4}\t{}\n",
            p.id,
            sol.forward.producer_total(i),
            uniform_mean(&p.q_dp),
            fmt_opt(pr[i])
        ));
    }
    let sr = supplier_forward_ratios(sol);
    for (j, c) in sol.suppliers.iter().enumerate() {
        out.push_str(&format!(
            "{}\tsupplier\t{:.4}\t{:.4}\t{}\n",
            c.id,
            sol.forward.supplier_total(j),
            uniform_mean(&c.q_dc),
            fmt_opt(sr[j])
        ));
    }
    out
}

/// Hub and area prices per scenario, scenarios in ascending total-wind order.
pub fn area_price_table(sol: &EquilibriumSolution) -> String {
    let mut out = String::from("scenario\ttotal_wind_mw\thub");
    for a in &sol.area_ids {
        out.push('\t');
        out.push_str(a);
    }
    out.push('\n');
    for &s in &sol.scenarios.order {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}",
            s + 1,
            sol.scenarios.total_wind[s],
            sol.prices[s].hub_price
        ));
        for p in &sol.prices[s].area_prices {
            out.push_str(&format!("\t{p:.4}"));
        }
        out.push('\n');
    }
    out
}

/// Flow and limit multipliers of each line per scenario.
pub fn line_loading_table(sol: &EquilibriumSolution) -> String {
    let mut out = String::from("scenario\tline\tflow_mw\tmu_upper\tmu_lower\n");
    for (s, flow) in sol.flows.iter().enumerate() {
        for (l, f) in flow.flows.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{:.4}\t{:.6}\t{:.6}\n",
                s + 1,
                l + 1,
                f,
                sol.duals.line_upper[s][l],
                sol.duals.line_lower[s][l]
            ));
        }
    }
    out
}

/// Every table with its conventional file name.
pub fn all_tables(sol: &EquilibriumSolution) -> Vec<(&'static str, String)> {
    vec![
        ("producers.tsv", producer_table(sol)),
        ("suppliers.tsv", supplier_table(sol)),
        ("forward_ratios.tsv", forward_ratio_table(sol)),
        ("area_prices.tsv", area_price_table(sol)),
        ("line_loadings.tsv", line_loading_table(sol)),
        ("price_comparison.tsv", price_comparison_table(sol)),
    ]
}
