//! Static market data: producers, suppliers, areas, transmission lines and wind plants.
//!
//! A [`MarketConfig`] is loaded from a TOML document, validated once and then treated as
//! immutable. All powers are MW, all
//! prices $/MWh and all cost slopes $/MW²h.

use std::collections::{HashMap, HashSet};
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version of the configuration schema understood by this crate.
pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED_PJM5: &str = include_str!("../data/pjm5.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema { found: u32 },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{entity}: unknown area `{area}`")]
    UnknownArea { entity: String, area: String },
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: String,
    /// Per-unit voltage magnitude.
    pub voltage: f64,
}

/// Aggregated producer with marginal cost `a + b·q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProducerParams {
    pub id: String,
    pub area: usize,
    pub a: f64,
    pub b: f64,
    pub q_max: f64,
    /// Concern coefficient of the exponential density used for risk weighting.
    pub beta: f64,
}

impl ProducerParams {
    pub fn marginal_cost(&self, q: f64) -> f64 {
        self.a + self.b * q
    }
}

/// Aggregated supplier (one per area) with marginal utility `c − d·q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplierParams {
    pub id: String,
    pub area: usize,
    pub c: f64,
    pub d: f64,
    pub beta: f64,
}

impl SupplierParams {
    pub fn marginal_utility(&self, q: f64) -> f64 {
        self.c - self.d * q
    }
}

/// Transmission corridor between two areas. Infinite limits mean the line is unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// MW per radian at 1 p.u. voltage.
    pub susceptance: f64,
    pub t_max: f64,
    pub t_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindPlant {
    pub id: String,
    pub area: usize,
    pub capacity: f64,
    /// Shape parameters of the Beta law of the capacity factor.
    pub shape: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    pub name: String,
    pub areas: Vec<Area>,
    pub producers: Vec<ProducerParams>,
    pub suppliers: Vec<SupplierParams>,
    pub lines: Vec<Line>,
    pub wind_plants: Vec<WindPlant>,
    /// Correlation of the plants' Gaussian scores, indexed like `wind_plants`.
    pub wind_correlation: Vec<Vec<f64>>,
    pub hub_area: usize,
    pub scenario_count: usize,
}

impl MarketConfig {
    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    pub fn area_index(&self, id: &str) -> Option<usize> {
        self.areas.iter().position(|a| a.id == id)
    }

    /// Index of the supplier serving `area`. Panics if the configuration was not validated.
    pub fn supplier_of_area(&self, area: usize) -> usize {
        self.suppliers
            .iter()
            .position(|s| s.area == area)
            .expect("every area has a supplier")
    }

    /// Flow coefficient `V_j V_m B_jm` of a line (MW per radian).
    pub fn flow_coefficient(&self, line: &Line) -> f64 {
        self.areas[line.from].voltage * self.areas[line.to].voltage * line.susceptance
    }

    /// Installed wind capacity per area (zero where no plant is sited).
    pub fn wind_capacity_by_area(&self) -> Vec<f64> {
        let mut cap = vec![0.0; self.n_areas()];
        for plant in &self.wind_plants {
            cap[plant.area] += plant.capacity;
        }
        cap
    }

    /// Copy of the configuration with every finite line limit multiplied by `scale`.
    pub fn with_line_scale(&self, scale: f64) -> MarketConfig {
        let mut out = self.clone();
        for line in &mut out.lines {
            line.t_max *= scale;
            line.t_min *= scale;
        }
        out
    }

    /// SHA-256 of the canonical TOML rendering, used to pair solutions with configurations.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(to_toml_string(self).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDocument {
    schema_version: u32,
    name: String,
    hub_area: String,
    scenario_count: usize,
    #[serde(default)]
    wind_correlation: Vec<Vec<f64>>,
    areas: Vec<AreaDocument>,
    producers: Vec<ProducerDocument>,
    suppliers: Vec<SupplierDocument>,
    #[serde(default)]
    lines: Vec<LineDocument>,
    #[serde(default)]
    wind_plants: Vec<WindPlantDocument>,
}

fn unit_voltage() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AreaDocument {
    id: String,
    #[serde(default = "unit_voltage")]
    voltage: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProducerDocument {
    id: String,
    area: String,
    a: f64,
    b: f64,
    q_max: f64,
    beta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupplierDocument {
    id: String,
    area: String,
    c: f64,
    d: f64,
    beta: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDocument {
    from: String,
    to: String,
    susceptance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    /// Defaults to `-t_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_min: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindPlantDocument {
    id: String,
    area: String,
    capacity: f64,
    cf_shape: [f64; 2],
}

/// The configuration bundled with the crate: the five-area PJM study case.
pub fn bundled_pjm5_case() -> MarketConfig {
    load_market_config(BUNDLED_PJM5).expect("bundled case is valid")
}

/// Raw text of the bundled case file.
pub fn bundled_pjm5_document() -> &'static str {
    BUNDLED_PJM5
}

/// Parse and validate a TOML configuration document.
pub fn load_market_config(document: &str) -> Result<MarketConfig, ConfigError> {
    let doc: ConfigDocument =
        toml::from_str(document).map_err(|e| ConfigError::Schema(e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::UnsupportedSchema {
            found: doc.schema_version,
        });
    }
    let config = from_document(doc)?;
    let violations = validate_config(&config);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

fn check_unique<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a String>,
) -> Result<(), ConfigError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ConfigError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

fn from_document(doc: ConfigDocument) -> Result<MarketConfig, ConfigError> {
    check_unique("area", doc.areas.iter().map(|a| &a.id))?;
    check_unique("producer", doc.producers.iter().map(|p| &p.id))?;
    check_unique("supplier", doc.suppliers.iter().map(|s| &s.id))?;
    check_unique("wind plant", doc.wind_plants.iter().map(|w| &w.id))?;

    let index: HashMap<&str, usize> = doc
        .areas
        .iter()
        .enumerate()
        .map(|(k, a)| (a.id.as_str(), k))
        .collect();
    let lookup = |entity: String, area: &str| -> Result<usize, ConfigError> {
        index
            .get(area)
            .copied()
            .ok_or_else(|| ConfigError::UnknownArea {
                entity,
                area: area.to_string(),
            })
    };

    let hub_area = lookup("hub_area".into(), &doc.hub_area)?;
    let mut producers = Vec::with_capacity(doc.producers.len());
    for p in &doc.producers {
        producers.push(ProducerParams {
            id: p.id.clone(),
            area: lookup(format!("producer {}", p.id), &p.area)?,
            a: p.a,
            b: p.b,
            q_max: p.q_max,
            beta: p.beta,
        });
    }
    let mut suppliers = Vec::with_capacity(doc.suppliers.len());
    for s in &doc.suppliers {
        suppliers.push(SupplierParams {
            id: s.id.clone(),
            area: lookup(format!("supplier {}", s.id), &s.area)?,
            c: s.c,
            d: s.d,
            beta: s.beta,
        });
    }
    let mut lines = Vec::with_capacity(doc.lines.len());
    for (n, l) in doc.lines.iter().enumerate() {
        let entity = format!("line {} ({}-{})", n + 1, l.from, l.to);
        let t_max = l.t_max.unwrap_or(f64::INFINITY);
        lines.push(Line {
            from: lookup(entity.clone(), &l.from)?,
            to: lookup(entity, &l.to)?,
            susceptance: l.susceptance,
            t_max,
            t_min: l.t_min.unwrap_or(-t_max),
        });
    }
    let mut wind_plants = Vec::with_capacity(doc.wind_plants.len());
    for w in &doc.wind_plants {
        wind_plants.push(WindPlant {
            id: w.id.clone(),
            area: lookup(format!("wind plant {}", w.id), &w.area)?,
            capacity: w.capacity,
            shape: (w.cf_shape[0], w.cf_shape[1]),
        });
    }
    let wind_correlation = if doc.wind_correlation.is_empty() {
        identity(wind_plants.len())
    } else {
        doc.wind_correlation
    };

    Ok(MarketConfig {
        name: doc.name,
        areas: doc
            .areas
            .into_iter()
            .map(|a| Area {
                id: a.id,
                voltage: a.voltage,
            })
            .collect(),
        producers,
        suppliers,
        lines,
        wind_plants,
        wind_correlation,
        hub_area,
        scenario_count: doc.scenario_count,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn to_document(config: &MarketConfig) -> ConfigDocument {
    let area_id = |k: usize| config.areas[k].id.clone();
    ConfigDocument {
        schema_version: SCHEMA_VERSION,
        name: config.name.clone(),
        hub_area: area_id(config.hub_area),
        scenario_count: config.scenario_count,
        wind_correlation: config.wind_correlation.clone(),
        areas: config
            .areas
            .iter()
            .map(|a| AreaDocument {
                id: a.id.clone(),
                voltage: a.voltage,
            })
            .collect(),
        producers: config
            .producers
            .iter()
            .map(|p| ProducerDocument {
                id: p.id.clone(),
                area: area_id(p.area),
                a: p.a,
                b: p.b,
                q_max: p.q_max,
                beta: p.beta,
            })
            .collect(),
        suppliers: config
            .suppliers
            .iter()
            .map(|s| SupplierDocument {
                id: s.id.clone(),
                area: area_id(s.area),
                c: s.c,
                d: s.d,
                beta: s.beta,
            })
            .collect(),
        lines: config
            .lines
            .iter()
            .map(|l| LineDocument {
                from: area_id(l.from),
                to: area_id(l.to),
                susceptance: l.susceptance,
                t_max: l.t_max.is_finite().then_some(l.t_max),
                t_min: (l.t_min != -l.t_max).then_some(l.t_min),
            })
            .collect(),
        wind_plants: config
            .wind_plants
            .iter()
            .map(|w| WindPlantDocument {
                id: w.id.clone(),
                area: area_id(w.area),
                capacity: w.capacity,
                cf_shape: [w.shape.0, w.shape.1],
            })
            .collect(),
    }
}

/// Render a configuration as a TOML document that [`load_market_config`] reads back unchanged.
pub fn to_toml_string(config: &MarketConfig) -> String {
    toml::to_string(&to_document(config)).expect("configuration serializes")
}

/// Check every invariant of the configuration. An empty list means the configuration is valid.
pub fn validate_config(config: &MarketConfig) -> Vec<String> {
    let mut out = Vec::new();
    let n_areas = config.n_areas();
    let area_name = |k: usize| {
        config
            .areas
            .get(k)
            .map(|a| a.id.clone())
            .unwrap_or_else(|| format!("#{k}"))
    };

    if n_areas == 0 {
        out.push("configuration has no areas".to_string());
        return out;
    }
    if config.hub_area >= n_areas {
        out.push(format!("hub_area index {} out of range", config.hub_area));
    }
    if config.scenario_count < 1 {
        out.push("scenario_count must be at least 1".to_string());
    }
    for a in &config.areas {
        if !(a.voltage > 0.0 && a.voltage.is_finite()) {
            out.push(format!("area {}: voltage must be positive", a.id));
        }
    }

    for p in &config.producers {
        let who = format!("producer {}", p.id);
        if p.area >= n_areas {
            out.push(format!("{who}: area index {} out of range", p.area));
        }
        if !p.a.is_finite() {
            out.push(format!("{who}: marginal cost intercept must be finite"));
        }
        if !(p.b > 0.0 && p.b.is_finite()) {
            out.push(format!("{who}: marginal cost slope must be positive"));
        }
        if !(p.q_max > 0.0 && p.q_max.is_finite()) {
            out.push(format!("{who}: capacity must be positive"));
        }
        if !(p.beta > 0.0 && p.beta.is_finite()) {
            out.push(format!("{who}: concern coefficient must be positive"));
        }
    }

    for s in &config.suppliers {
        let who = format!("supplier {}", s.id);
        if s.area >= n_areas {
            out.push(format!("{who}: area index {} out of range", s.area));
        }
        if !(s.c > 0.0 && s.c.is_finite()) {
            out.push(format!("{who}: marginal utility intercept must be positive"));
        }
        if !(s.d > 0.0 && s.d.is_finite()) {
            out.push(format!("{who}: marginal utility slope must be positive"));
        }
        if !(s.beta > 0.0 && s.beta.is_finite()) {
            out.push(format!("{who}: concern coefficient must be positive"));
        }
    }
    for k in 0..n_areas {
        let count = config.suppliers.iter().filter(|s| s.area == k).count();
        if count != 1 {
            out.push(format!(
                "area {}: exactly one supplier per area (found {count})",
                area_name(k)
            ));
        }
    }

    for (n, l) in config.lines.iter().enumerate() {
        let who = format!("line {} ({}-{})", n + 1, area_name(l.from), area_name(l.to));
        if l.from >= n_areas || l.to >= n_areas {
            out.push(format!("{who}: area index out of range"));
            continue;
        }
        if l.from == l.to {
            out.push(format!("{who}: endpoints must differ"));
        }
        if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
            out.push(format!("{who}: susceptance must be positive"));
        }
        if l.t_min.is_nan() || l.t_max.is_nan() || !(l.t_min <= 0.0 && 0.0 <= l.t_max) {
            out.push(format!("{who}: limits must satisfy t_min <= 0 <= t_max"));
        }
    }

    let mut wind_areas = HashSet::new();
    for w in &config.wind_plants {
        let who = format!("wind plant {}", w.id);
        if w.area >= n_areas {
            out.push(format!("{who}: area index {} out of range", w.area));
        } else if !wind_areas.insert(w.area) {
            out.push(format!(
                "{who}: area {} already has a wind plant",
                area_name(w.area)
            ));
        }
        if !(w.capacity >= 0.0 && w.capacity.is_finite()) {
            out.push(format!("{who}: capacity must be nonnegative"));
        }
        if !(w.shape.0 > 0.0 && w.shape.1 > 0.0) {
            out.push(format!("{who}: shape parameters must be positive"));
        }
    }
    out.extend(correlation_violations(&config.wind_correlation, config.wind_plants.len()));

    if config.hub_area < n_areas {
        for k in disconnected_areas(config) {
            out.push(format!(
                "area {}: not connected to hub area {}",
                area_name(k),
                area_name(config.hub_area)
            ));
        }
    }
    out
}

fn correlation_violations(corr: &[Vec<f64>], n: usize) -> Vec<String> {
    let mut out = Vec::new();
    if corr.len() != n || corr.iter().any(|row| row.len() != n) {
        out.push(format!("wind correlation matrix: expected {n}x{n}"));
        return out;
    }
    for i in 0..n {
        if (corr[i][i] - 1.0).abs() > 1e-12 {
            out.push(format!("wind correlation matrix: diagonal entry {} is not 1", i + 1));
        }
        for j in 0..i {
            if (corr[i][j] - corr[j][i]).abs() > 1e-12 {
                out.push(format!(
                    "wind correlation matrix: not symmetric at ({}, {})",
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    if n > 0 && out.is_empty() {
        let min_eig = min_eigenvalue(corr);
        if min_eig < -1e-10 {
            out.push(format!(
                "wind correlation matrix: not positive semidefinite (min eigenvalue {min_eig:.3e})"
            ));
        }
    }
    out
}

pub(crate) fn min_eigenvalue(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn disconnected_areas(config: &MarketConfig) -> Vec<usize> {
    let n = config.n_areas();
    let mut adjacency = vec![Vec::new(); n];
    for l in &config.lines {
        if l.from < n && l.to < n {
            adjacency[l.from].push(l.to);
            adjacency[l.to].push(l.from);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![config.hub_area];
    seen[config.hub_area] = true;
    while let Some(k) = stack.pop() {
        for &m in &adjacency[k] {
            if !seen[m] {
                seen[m] = true;
                stack.push(m);
            }
        }
    }
    (0..n).filter(|&k| !seen[k]).collect()
}

impl fmt::Display for MarketConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} areas, {} producers, {} suppliers, {} lines, {} wind plants, {} scenarios",
            self.name,
            self.n_areas(),
            self.producers.len(),
            self.suppliers.len(),
            self.lines.len(),
            self.wind_plants.len(),
            self.scenario_count
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_case_matches_published_tables() {
        let cfg = bundled_pjm5_case();
        let a: Vec<f64> = cfg.producers.iter().map(|p| p.a).collect();
        let b: Vec<f64> = cfg.producers.iter().map(|p| p.b).collect();
        let q: Vec<f64> = cfg.producers.iter().map(|p| p.q_max).collect();
        let bp: Vec<f64> = cfg.producers.iter().map(|p| p.beta).collect();
        assert_eq!(a, [20.0, 16.0, 10.8, 5.6]);
        assert_eq!(b, [0.017, 0.007, 0.011, 0.026]);
        assert_eq!(q, [2500.0, 4000.0, 3500.0, 3000.0]);
        assert_eq!(bp, [0.65, 0.5, 0.6, 0.7]);

        let c: Vec<f64> = cfg.suppliers.iter().map(|s| s.c).collect();
        let d: Vec<f64> = cfg.suppliers.iter().map(|s| s.d).collect();
        let bc: Vec<f64> = cfg.suppliers.iter().map(|s| s.beta).collect();
        assert_eq!(c, [65.0, 61.0, 63.0, 65.0, 66.0]);
        assert_eq!(d, [0.005, 0.003, 0.01, 0.004, 0.005]);
        assert_eq!(bc, [0.5, 0.65, 0.75, 0.4, 0.5]);

        let caps: Vec<f64> = cfg.wind_plants.iter().map(|w| w.capacity).collect();
        assert_eq!(caps, [1500.0, 2500.0, 2000.0]);
        assert_eq!(cfg.wind_correlation[0][1], 0.7);
        assert_eq!(cfg.wind_correlation[0][2], 0.85);
        assert_eq!(cfg.scenario_count, 16);
        assert_eq!(cfg.producers[2].a, 10.8);
        assert_eq!(cfg.suppliers[2].d, 0.01);
        assert!(validate_config(&cfg).is_empty());
    }

    #[test]
    fn zero_cost_slope_is_rejected() {
        let doc = bundled_pjm5_document().replacen("b = 0.017", "b = 0.0", 1);
        let err = load_market_config(&doc).unwrap_err().to_string();
        assert!(err.contains("marginal cost slope must be positive"), "{err}");
    }

    #[test]
    fn two_suppliers_in_one_area_are_rejected() {
        let mut cfg = bundled_pjm5_case();
        cfg.suppliers[1].area = cfg.suppliers[0].area;
        let text = to_toml_string(&cfg);
        let err = load_market_config(&text).unwrap_err().to_string();
        assert!(err.contains("exactly one supplier per area"), "{err}");
    }

    #[test]
    fn document_round_trip_is_exact() {
        let cfg = bundled_pjm5_case();
        let back = load_market_config(&to_toml_string(&cfg)).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.content_hash(), back.content_hash());
    }

    #[test]
    fn missing_field_is_a_schema_error() {
        let doc = bundled_pjm5_document().replacen("q_max = 2500.0", "", 1);
        assert!(matches!(
            load_market_config(&doc),
            Err(ConfigError::Schema(_))
        ));
    }

    #[test]
    fn wrong_type_and_version_are_reported() {
        let doc = bundled_pjm5_document().replacen("a = 20.0", "a = \"twenty\"", 1);
        assert!(matches!(load_market_config(&doc), Err(ConfigError::Schema(_))));
        let doc = bundled_pjm5_document().replacen("schema_version = 1", "schema_version = 7", 1);
        assert!(matches!(
            load_market_config(&doc),
            Err(ConfigError::UnsupportedSchema { found: 7 })
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let doc = bundled_pjm5_document().replacen("id = \"P2\"", "id = \"P1\"", 1);
        assert!(matches!(
            load_market_config(&doc),
            Err(ConfigError::DuplicateId { kind: "producer", .. })
        ));
    }

    #[test]
    fn disconnected_area_is_named() {
        let mut cfg = bundled_pjm5_case();
        let e = cfg.area_index("E").unwrap();
        cfg.lines.retain(|l| l.from != e && l.to != e);
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("area E") && v[0].contains("not connected"));
    }

    #[test]
    fn indefinite_correlation_is_reported() {
        let mut cfg = bundled_pjm5_case();
        // eigenvalues of [[1, r], [r, 1]] are 1 ± r; r = 1.1 gives -0.1
        cfg.wind_plants.truncate(2);
        cfg.wind_correlation = vec![vec![1.0, 1.1], vec![1.1, 1.0]];
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("not positive semidefinite"));
        assert!(v[0].contains("-1.000e-1"), "{}", v[0]);
    }

    #[test]
    fn line_scale_keeps_unlimited_lines_unlimited() {
        let cfg = bundled_pjm5_case().with_line_scale(0.7);
        assert!(cfg.lines.iter().any(|l| l.t_max.is_infinite()));
        assert!(cfg.lines.iter().any(|l| (l.t_max - 280.0).abs() < 1e-9));
    }

    #[test]
    fn marginal_cost_is_increasing() {
        for p in &bundled_pjm5_case().producers {
            let mut prev = p.marginal_cost(0.0);
            for k in 1..=100 {
                let mc = p.marginal_cost(p.q_max * k as f64 / 100.0);
                assert!(mc > prev);
                prev = mc;
            }
        }
    }
}
