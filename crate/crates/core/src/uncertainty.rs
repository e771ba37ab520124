//! Wind-output scenarios and per-player concern weights.
//!
//! Scenarios come from a Gaussian copula with Beta marginals, reduced to a handful of
//! representative points by k-means. Concern weights replace scenario probabilities: each
//! player weighs the scenarios it fears most (low wind for suppliers, high wind for
//! producers) with the largest bins of a discretized exponential density.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use crate::model::MarketConfig;

const SCENARIO_FILE_HEADER: &str = "# nashgrid scenario set v1";
const LLOYD_MAX_ITER: usize = 200;
const MOMENT_MATCH_ROUNDS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("wind correlation matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("wind correlation matrix must be {expected}x{expected}")]
    CorrelationShape { expected: usize },
    #[error("sample_count must be at least 1")]
    NoSamples,
    #[error("target scenario count must be at least 1")]
    ZeroScenarios,
    #[error("target scenario count {target} exceeds sample count {samples}")]
    TooFewSamples { target: usize, samples: usize },
    #[error("sample rows must all have {expected} values")]
    Ragged { expected: usize },
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("row {row}, area {area}: output {value} MW exceeds wind capacity {capacity} MW")]
    AboveCapacity {
        row: usize,
        area: String,
        value: f64,
        capacity: f64,
    },
    #[error("row {row}, area {area}: output {value} MW is negative")]
    Negative { row: usize, area: String, value: f64 },
    #[error("row {row}: expected {expected} values, found {found}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("concern coefficient must be positive and finite (got {0})")]
    BadBeta(f64),
    #[error("concern coefficient {beta} too large for {count} scenarios: weights underflow")]
    WeightUnderflow { beta: f64, count: usize },
}

/// Ordered discrete wind scenarios, one output per area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    /// `outputs[s][k]`: wind output of area `k` in scenario `s` (MW).
    pub outputs: Vec<Vec<f64>>,
    pub total_wind: Vec<f64>,
    /// Scenario indices sorted ascending by total wind, ties by index.
    pub order: Vec<usize>,
}

impl ScenarioSet {
    pub fn from_outputs(outputs: Vec<Vec<f64>>) -> Self {
        let total_wind: Vec<f64> = outputs.iter().map(|row| row.iter().sum()).collect();
        let mut order: Vec<usize> = (0..outputs.len()).collect();
        order.sort_by(|&x, &y| total_wind[x].total_cmp(&total_wind[y]));
        ScenarioSet {
            outputs,
            total_wind,
            order,
        }
    }

    /// A single scenario with the given per-area outputs.
    pub fn single(outputs: Vec<f64>) -> Self {
        Self::from_outputs(vec![outputs])
    }

    pub fn count(&self) -> usize {
        self.outputs.len()
    }

    /// Rank of scenario `s` in ascending total-wind order.
    pub fn rank_of(&self, s: usize) -> usize {
        self.order.iter().position(|&x| x == s).expect("scenario index")
    }

    /// Per-area mean output over scenarios (equal scenario treatment).
    pub fn area_means(&self) -> Vec<f64> {
        column_means(&self.outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Producer,
    Supplier,
}

/// Concern weights of one player, stored by scenario rank (ascending total wind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcernWeights {
    pub player: Option<String>,
    pub role: Role,
    pub beta: f64,
    pub by_rank: Vec<f64>,
}

impl ConcernWeights {
    /// Weights indexed by scenario index of `scenarios`.
    pub fn by_scenario(&self, scenarios: &ScenarioSet) -> Vec<f64> {
        let mut out = vec![0.0; self.by_rank.len()];
        for (rank, &s) in scenarios.order.iter().enumerate() {
            out[s] = self.by_rank[rank];
        }
        out
    }
}

/// Scenario-indexed weights of every player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerWeights {
    /// `producers[i][s]`
    pub producers: Vec<Vec<f64>>,
    /// `suppliers[j][s]`
    pub suppliers: Vec<Vec<f64>>,
}

impl PlayerWeights {
    pub fn for_config(
        config: &MarketConfig,
        scenarios: &ScenarioSet,
    ) -> Result<Self, ScenarioError> {
        let n_s = scenarios.count();
        let mut producers = Vec::new();
        for p in &config.producers {
            let mut w = concern_weights(p.beta, n_s, Role::Producer)?;
            w.player = Some(p.id.clone());
            producers.push(w.by_scenario(scenarios));
        }
        let mut suppliers = Vec::new();
        for c in &config.suppliers {
            let mut w = concern_weights(c.beta, n_s, Role::Supplier)?;
            w.player = Some(c.id.clone());
            suppliers.push(w.by_scenario(scenarios));
        }
        Ok(PlayerWeights {
            producers,
            suppliers,
        })
    }

    /// Every player weighs all scenarios equally.
    pub fn uniform(config: &MarketConfig, n_s: usize) -> Self {
        let w = vec![1.0 / n_s as f64; n_s];
        PlayerWeights {
            producers: vec![w.clone(); config.producers.len()],
            suppliers: vec![w; config.suppliers.len()],
        }
    }
}

/// Concern weights from unit-width bins of the density `beta·exp(−beta·x)`, normalized.
///
/// Suppliers put the largest mass on the lowest-wind scenario, producers on the highest.
pub fn concern_weights(beta: f64, n_s: usize, role: Role) -> Result<ConcernWeights, ScenarioError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ScenarioError::BadBeta(beta));
    }
    if n_s < 1 {
        return Err(ScenarioError::ZeroScenarios);
    }
    if beta * (n_s as f64 - 1.0) > 700.0 {
        return Err(ScenarioError::WeightUnderflow { beta, count: n_s });
    }
    // Bin k has mass exp(-beta k)(1 - exp(-beta)); the common factor cancels on normalizing.
    let raw: Vec<f64> = (0..n_s).map(|k| (-beta * k as f64).exp()).collect();
    let total: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    if role == Role::Producer {
        masses.reverse();
    }
    Ok(ConcernWeights {
        player: None,
        role,
        beta,
        by_rank: masses,
    })
}

/// Symmetric square root-like factor `L` with `L Lᵀ = corr`, tolerant of singular matrices.
fn correlation_factor(corr: &[Vec<f64>]) -> Result<DMatrix<f64>, ScenarioError> {
    let n = corr.len();
    if corr.iter().any(|row| row.len() != n) {
        return Err(ScenarioError::CorrelationShape { expected: n });
    }
    let m = DMatrix::from_fn(n, n, |i, j| corr[i][j]);
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 && min < -1e-10 {
        return Err(ScenarioError::NotPsd(min));
    }
    let sqrt = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt))
}

/// Draw correlated wind outputs: `sample_count` rows of per-area MW.
pub fn sample_copula_scenarios(
    config: &MarketConfig,
    sample_count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ScenarioError> {
    if sample_count < 1 {
        return Err(ScenarioError::NoSamples);
    }
    let n_w = config.wind_plants.len();
    if config.wind_correlation.len() != n_w {
        return Err(ScenarioError::CorrelationShape { expected: n_w });
    }
    let factor = correlation_factor(&config.wind_correlation)?;
    let std_normal = Normal::standard();
    let marginals: Vec<Beta> = config
        .wind_plants
        .iter()
        .map(|w| Beta::new(w.shape.0, w.shape.1).expect("validated shape"))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DVector::zeros(n_w);
    let mut out = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let y = &factor * &z;
        let mut row = vec![0.0; config.n_areas()];
        for (p, plant) in config.wind_plants.iter().enumerate() {
            if plant.capacity == 0.0 {
                continue;
            }
            let u = std_normal.cdf(y[p]).clamp(1e-15, 1.0 - 1e-15);
            let cf = marginals[p].inverse_cdf(u).clamp(0.0, 1.0);
            row[plant.area] = plant.capacity * cf;
        }
        out.push(row);
    }
    Ok(out)
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let mean_rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mean_rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Normal-scores correlation between two columns of a sample matrix.
///
/// Invariant under the monotone marginal transform, so it estimates the copula correlation.
pub fn gaussian_rank_correlation(samples: &[Vec<f64>], col_a: usize, col_b: usize) -> f64 {
    let n = samples.len();
    let std_normal = Normal::standard();
    let scores = |col: usize| -> Vec<f64> {
        let values: Vec<f64> = samples.iter().map(|r| r[col]).collect();
        average_ranks(&values)
            .into_iter()
            .map(|r| std_normal.inverse_cdf(r / (n as f64 + 1.0)))
            .collect()
    };
    pearson(&scores(col_a), &scores(col_b))
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Reduce a sample cloud to `n_s` centroids whose per-area mean matches the sample mean.
pub fn reduce_scenarios(samples: &[Vec<f64>], n_s: usize) -> Result<ScenarioSet, ScenarioError> {
    if n_s < 1 {
        return Err(ScenarioError::ZeroScenarios);
    }
    if samples.len() < n_s {
        return Err(ScenarioError::TooFewSamples {
            target: n_s,
            samples: samples.len(),
        });
    }
    let width = samples[0].len();
    if samples.iter().any(|r| r.len() != width) {
        return Err(ScenarioError::Ragged { expected: width });
    }
    if samples.len() == n_s {
        return Ok(ScenarioSet::from_outputs(samples.to_vec()));
    }

    // Deterministic start: contiguous total-wind quantile groups.
    let totals: Vec<f64> = samples.iter().map(|r| r.iter().sum()).collect();
    let mut by_total: Vec<usize> = (0..samples.len()).collect();
    by_total.sort_by(|&a, &b| totals[a].total_cmp(&totals[b]));
    let mut assign = vec![0usize; samples.len()];
    for (pos, &i) in by_total.iter().enumerate() {
        assign[i] = pos * n_s / samples.len();
    }
    let mut centroids = vec![vec![0.0; width]; n_s];

    for _ in 0..LLOYD_MAX_ITER {
        let mut counts = vec![0usize; n_s];
        centroids.iter_mut().for_each(|c| c.fill(0.0));
        for (i, row) in samples.iter().enumerate() {
            counts[assign[i]] += 1;
            for (c, v) in centroids[assign[i]].iter_mut().zip(row) {
                *c += v;
            }
        }
        for (c, &n) in centroids.iter_mut().zip(&counts) {
            if n > 0 {
                c.iter_mut().for_each(|v| *v /= n as f64);
            }
        }
        // Reseed empty clusters with the point farthest from its centroid.
        for k in 0..n_s {
            if counts[k] == 0 {
                let far = (0..samples.len())
                    .filter(|&i| counts[assign[i]] > 1)
                    .max_by(|&a, &b| {
                        sq_dist(&samples[a], &centroids[assign[a]])
                            .total_cmp(&sq_dist(&samples[b], &centroids[assign[b]]))
                    });
                if let Some(i) = far {
                    counts[assign[i]] -= 1;
                    assign[i] = k;
                    counts[k] = 1;
                    centroids[k] = samples[i].clone();
                }
            }
        }
        let mut changed = false;
        for (i, row) in samples.iter().enumerate() {
            let mut best = assign[i];
            let mut best_d = sq_dist(row, &centroids[best]);
            for (k, c) in centroids.iter().enumerate() {
                let d = sq_dist(row, c);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            if best != assign[i] && counts[assign[i]] > 1 {
                counts[assign[i]] -= 1;
                counts[best] += 1;
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Shift centroids so their mean equals the sample mean, staying inside the sample range.
    let target = column_means(samples);
    let lo: Vec<f64> = (0..width)
        .map(|k| samples.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..width)
        .map(|k| samples.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    for _ in 0..MOMENT_MATCH_ROUNDS {
        let mean = column_means(&centroids);
        let mut worst: f64 = 0.0;
        for k in 0..width {
            let shift = target[k] - mean[k];
            worst = worst.max(shift.abs());
            for c in centroids.iter_mut() {
                c[k] = (c[k] + shift).clamp(lo[k], hi[k]);
            }
        }
        if worst <= 1e-12 * (1.0 + hi.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    Ok(ScenarioSet::from_outputs(centroids))
}

/// Render a scenario set as a tab-separated file with one column per wind area.
pub fn write_scenarios(set: &ScenarioSet, config: &MarketConfig) -> String {
    let cols = wind_columns(config);
    let mut out = String::new();
    out.push_str(SCENARIO_FILE_HEADER);
    out.push('\n');
    let header: Vec<&str> = cols.iter().map(|&k| config.areas[k].id.as_str()).collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in &set.outputs {
        let cells: Vec<String> = cols.iter().map(|&k| format!("{:.6}", row[k])).collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}

fn wind_columns(config: &MarketConfig) -> Vec<usize> {
    let mut cols: Vec<usize> = config.wind_plants.iter().map(|w| w.area).collect();
    cols.sort_unstable();
    cols
}

/// Parse a scenario file. Areas missing from the header carry no wind.
pub fn load_scenarios(document: &str, config: &MarketConfig) -> Result<ScenarioSet, ScenarioError> {
    let mut lines = document
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty());
    let mut header = None;
    for line in lines.by_ref() {
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("nashgrid scenario set ") {
                if v != "v1" {
                    return Err(ScenarioError::Parse(format!("unsupported version `{v}`")));
                }
            }
            continue;
        }
        header = Some(line);
        break;
    }
    let header = header.ok_or_else(|| ScenarioError::Parse("missing header row".into()))?;
    let mut cols = Vec::new();
    for id in header.split_whitespace() {
        let k = config
            .area_index(id)
            .ok_or_else(|| ScenarioError::Parse(format!("unknown area `{id}` in header")))?;
        if cols.contains(&k) {
            return Err(ScenarioError::Parse(format!("area `{id}` listed twice")));
        }
        cols.push(k);
    }
    let capacity = config.wind_capacity_by_area();
    let mut outputs = Vec::new();
    for line in lines {
        if line.starts_with('#') {
            continue;
        }
        let row_no = outputs.len() + 1;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.len() != cols.len() {
            return Err(ScenarioError::RowWidth {
                row: row_no,
                expected: cols.len(),
                found: cells.len(),
            });
        }
        let mut row = vec![0.0; config.n_areas()];
        for (&k, cell) in cols.iter().zip(&cells) {
            let value: f64 = cell
                .parse()
                .map_err(|_| ScenarioError::Parse(format!("row {row_no}: bad number `{cell}`")))?;
            let area = config.areas[k].id.clone();
            if !(value >= 0.0) {
                return Err(ScenarioError::Negative {
                    row: row_no,
                    area,
                    value,
                });
            }
            if value > capacity[k] {
                return Err(ScenarioError::AboveCapacity {
                    row: row_no,
                    area,
                    value,
                    capacity: capacity[k],
                });
            }
            row[k] = value;
        }
        outputs.push(row);
    }
    if outputs.is_empty() {
        return Err(ScenarioError::Parse("no scenario rows".into()));
    }
    Ok(ScenarioSet::from_outputs(outputs))
}

/// Generate the configured number of scenarios from `sample_count` copula draws.
pub fn generate_scenarios(
    config: &MarketConfig,
    sample_count: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    let samples = sample_copula_scenarios(config, sample_count, seed)?;
    reduce_scenarios(&samples, config.scenario_count)
}

/// Raw sample count used when reducing to the configured scenario count.
pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;

/// Reference scenario set shipped with the bundled case (seed 1, default sample count).
pub fn bundled_pjm5_scenarios() -> ScenarioSet {
    let config = crate::model::bundled_pjm5_case();
    load_scenarios(include_str!("../data/pjm5_scenarios.tsv"), &config)
        .expect("bundled scenario file is valid")
}
