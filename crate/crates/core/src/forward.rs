//! Bilateral forward contracts cleared at the intersection of affine bids.
//!
//! Producer i offers along `α_ij + b_i·Q`, supplier j bids along `ε_ji − d_j·Q`. The crossing
//! point fixes both the contract quantity and its price. One matrix entry serves both
//! counterparties, so the two views of a contract can never disagree.

use serde::{Deserialize, Serialize};

use crate::model::MarketConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ForwardError {
    #[error("bid slopes must sum to a positive value (b + d = {0})")]
    DegenerateSlopes(f64),
    #[error("bid matrix {name} is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Dimension {
        name: &'static str,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
}

/// Bid intercepts of every contract pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidIntercepts {
    /// `alpha[i][j]`: producer i toward supplier j.
    pub alpha: Vec<Vec<f64>>,
    /// `epsilon[j][i]`: supplier j toward producer i.
    pub epsilon: Vec<Vec<f64>>,
}

/// Cleared contracts, indexed `[producer][supplier]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardPosition {
    pub quantity: Vec<Vec<f64>>,
    pub price: Vec<Vec<f64>>,
}

impl ForwardPosition {
    pub fn zeros(n_p: usize, n_c: usize) -> Self {
        ForwardPosition {
            quantity: vec![vec![0.0; n_c]; n_p],
            price: vec![vec![0.0; n_c]; n_p],
        }
    }

    /// Contract between producer i and supplier j, seen from the producer.
    pub fn producer_view(&self, i: usize, j: usize) -> (f64, f64) {
        (self.quantity[i][j], self.price[i][j])
    }

    /// Contract between supplier j and producer i, seen from the supplier.
    pub fn supplier_view(&self, j: usize, i: usize) -> (f64, f64) {
        (self.quantity[i][j], self.price[i][j])
    }

    pub fn producer_total(&self, i: usize) -> f64 {
        self.quantity[i].iter().sum()
    }

    pub fn supplier_total(&self, j: usize) -> f64 {
        self.quantity.iter().map(|row| row[j]).sum()
    }

    /// Per-area net forward power delivered by the grid: purchases of the area's supplier
    /// minus sales of producers located there.
    pub fn forward_import(&self, config: &MarketConfig) -> Vec<f64> {
        let mut net = vec![0.0; config.n_areas()];
        for (i, p) in config.producers.iter().enumerate() {
            net[p.area] -= self.producer_total(i);
        }
        for (j, s) in config.suppliers.iter().enumerate() {
            net[s.area] += self.supplier_total(j);
        }
        net
    }
}

/// Total contracted quantity and quantity-weighted average price of one player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerAggregate {
    pub total: f64,
    /// `None` when the player holds no contracts.
    pub average_price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSummary {
    pub producers: Vec<PlayerAggregate>,
    pub suppliers: Vec<PlayerAggregate>,
}

/// Intersect one pair of affine bids. The raw quantity may be negative.
pub fn clear_contract(alpha: f64, epsilon: f64, b: f64, d: f64) -> Result<(f64, f64), ForwardError> {
    let s = b + d;
    if !(s > 0.0) {
        return Err(ForwardError::DegenerateSlopes(s));
    }
    Ok(((epsilon - alpha) / s, (b * epsilon + d * alpha) / s))
}

fn check_shape(
    name: &'static str,
    m: &[Vec<f64>],
    want_rows: usize,
    want_cols: usize,
) -> Result<(), ForwardError> {
    let bad = m.len() != want_rows || m.iter().any(|r| r.len() != want_cols);
    if bad {
        return Err(ForwardError::Dimension {
            name,
            rows: m.len(),
            cols: m.first().map_or(0, Vec::len),
            want_rows,
            want_cols,
        });
    }
    Ok(())
}

/// Clear every producer–supplier pair with its own slopes.
pub fn clear_all(bids: &BidIntercepts, config: &MarketConfig) -> Result<ForwardPosition, ForwardError> {
    let n_p = config.producers.len();
    let n_c = config.suppliers.len();
    check_shape("alpha", &bids.alpha, n_p, n_c)?;
    check_shape("epsilon", &bids.epsilon, n_c, n_p)?;
    let mut pos = ForwardPosition::zeros(n_p, n_c);
    for (i, p) in config.producers.iter().enumerate() {
        for (j, s) in config.suppliers.iter().enumerate() {
            let (q, f) = clear_contract(bids.alpha[i][j], bids.epsilon[j][i], p.b, s.d)?;
            pos.quantity[i][j] = q;
            pos.price[i][j] = f;
        }
    }
    Ok(pos)
}

fn aggregate(pairs: impl Iterator<Item = (f64, f64)>) -> PlayerAggregate {
    let (mut total, mut value) = (0.0, 0.0);
    for (q, f) in pairs {
        total += q;
        value += q * f;
    }
    PlayerAggregate {
        total,
        average_price: (total.abs() > 1e-9).then(|| value / total),
    }
}

/// Row and column totals with quantity-weighted average prices.
pub fn aggregate_positions(pos: &ForwardPosition) -> PositionSummary {
    let n_c = pos.quantity.first().map_or(0, Vec::len);
    let producers = (0..pos.quantity.len())
        .map(|i| aggregate((0..n_c).map(|j| pos.producer_view(i, j))))
        .collect();
    let suppliers = (0..n_c)
        .map(|j| aggregate((0..pos.quantity.len()).map(|i| pos.supplier_view(j, i))))
        .collect();
    PositionSummary {
        producers,
        suppliers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_intercepts_clear_at_zero() {
        assert_eq!(clear_contract(40.0, 40.0, 0.017, 0.005).unwrap(), (0.0, 40.0));
    }

    #[test]
    fn degenerate_slopes_are_rejected() {
        assert!(clear_contract(1.0, 2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn weighted_average() {
        let pos = ForwardPosition {
            quantity: vec![vec![100.0, 300.0]],
            price: vec![vec![50.0, 54.0]],
        };
        let s = aggregate_positions(&pos);
        assert_eq!(s.producers[0].total, 400.0);
        assert!((s.producers[0].average_price.unwrap() - 53.0).abs() < 1e-12);
        assert_eq!(s.suppliers[0].average_price, Some(50.0));
    }

    #[test]
    fn empty_position_has_no_average() {
        let s = aggregate_positions(&ForwardPosition::zeros(2, 3));
        assert!(s.producers.iter().all(|p| p.total == 0.0 && p.average_price.is_none()));
    }
}
