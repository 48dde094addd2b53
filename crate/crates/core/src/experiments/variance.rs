//! Gradient variance versus circuit depth under random initialization.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{csv_bytes, CsvTable, Provenance, Report};
use crate::autodiff::{Objective, Sample};
use crate::circuit::{CircuitSpec, Entangler, ParameterSet};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::outputs::{Head, DEFAULT_EPS};

fn default_qubits() -> usize {
    4
}
fn default_depths() -> Vec<usize> {
    (2..=16).step_by(2).collect()
}
fn default_seeds() -> usize {
    5
}
fn default_ensembles() -> usize {
    100
}
fn default_head() -> Head {
    Head::Pauli
}
fn default_probe_x() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceScanConfig {
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    /// Strictly ascending layer counts.
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    /// Random parameter draws per (depth, seed) cell.
    #[serde(default = "default_ensembles")]
    pub n_ensembles: usize,
    #[serde(default = "default_head")]
    pub head: Head,
    #[serde(default)]
    pub entangler: Entangler,
    /// Input of the single fixed probe sample. Its target is zero.
    #[serde(default = "default_probe_x")]
    pub probe_x: f64,
    /// Flat index of the differentiated parameter.
    #[serde(default)]
    pub param_index: usize,
    /// Seed of the first scan seed; scan seed `s` uses `seed + s`.
    #[serde(default)]
    pub seed: u64,
}

impl Default for VarianceScanConfig {
    fn default() -> Self {
        Self {
            n_qubits: default_qubits(),
            depths: default_depths(),
            n_seeds: default_seeds(),
            n_ensembles: default_ensembles(),
            head: default_head(),
            entangler: Entangler::default(),
            probe_x: default_probe_x(),
            param_index: 0,
            seed: 0,
        }
    }
}

impl VarianceScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() {
            return Err(Error::Config("depth list is empty".into()));
        }
        if self.depths.windows(2).any(|w| w[0] >= w[1]) || self.depths[0] == 0 {
            return Err(Error::Config(format!("depths must be positive and strictly ascending, got {:?}", self.depths)));
        }
        if self.n_seeds == 0 || self.n_ensembles == 0 {
            return Err(Error::Config("need at least one seed and one draw per cell".into()));
        }
        let spec = CircuitSpec::new(self.n_qubits, self.depths[0], self.entangler)?;
        if self.param_index >= spec.n_params() {
            return Err(Error::Index(format!(
                "parameter index {} out of range for {} parameters",
                self.param_index,
                spec.n_params()
            )));
        }
        Ok(())
    }

    /// The probe target: a scalar zero for the pauli head, the zero vector
    /// over every output for the lrp head.
    pub fn probe_target(&self) -> Vec<f64> {
        match self.head {
            Head::Pauli => vec![0.0],
            Head::Lrp => vec![0.0; self.head.output_len(self.n_qubits)],
        }
    }
}

/// One (depth, seed) cell of the scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceCell {
    pub head: Head,
    pub n_qubits: usize,
    pub depth: usize,
    pub seed: u64,
    pub n_draws: usize,
    /// Population variance of the gradient component over the draws.
    pub variance: f64,
    pub mean_gradient: f64,
}

/// Trend statistics of one seed across depths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedTrend {
    pub seed: u64,
    pub spearman: f64,
    /// Variance at the deepest over the shallowest depth.
    pub last_over_first: f64,
    /// Least-squares slope of `ln(variance)` against depth.
    pub log_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceScanReport {
    pub provenance: Provenance,
    pub head: Head,
    pub n_qubits: usize,
    pub depths: Vec<usize>,
    /// Ordered by seed, then depth.
    pub cells: Vec<VarianceCell>,
    pub trends: Vec<SeedTrend>,
}

impl VarianceScanReport {
    pub fn variances_for_seed(&self, seed: u64) -> Vec<f64> {
        self.cells.iter().filter(|c| c.seed == seed).map(|c| c.variance).collect()
    }
}

impl Report for VarianceScanReport {
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn csv_tables(&self) -> Result<Vec<CsvTable>> {
        Ok(vec![CsvTable { name: String::new(), body: csv_bytes(&self.cells)? }])
    }
}

/// Mean and population variance.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, vx) = mean_and_variance(x);
    let (my, vy) = mean_and_variance(y);
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    cov / (vx * vy).sqrt()
}

/// Spearman rank correlation; NaN when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, vx) = mean_and_variance(x);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64 / vx
}

/// Gradient draws for one cell. The cell's random stream depends only on
/// `(seed, depth)`, so any cell can be recomputed in isolation.
pub fn variance_cell(cfg: &VarianceScanConfig, depth: usize, seed: u64) -> Result<VarianceCell> {
    let spec = CircuitSpec::new(cfg.n_qubits, depth, cfg.entangler)?;
    let objective = Objective::new(spec, cfg.head, LossKind::Mse);
    let batch = [Sample::new(cfg.probe_x, cfg.probe_target())];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(depth as u64);
    let draws: Vec<ParameterSet> = (0..cfg.n_ensembles)
        .map(|_| ParameterSet::new((0..spec.n_params()).map(|_| rng.random_range(0.0..TAU)).collect()))
        .collect();
    let grads = draws
        .par_iter()
        .map(|p| objective.gradient(p, &batch).map(|g| g[cfg.param_index]))
        .collect::<Result<Vec<f64>>>()?;
    let (mean_gradient, variance) = mean_and_variance(&grads);
    Ok(VarianceCell { head: cfg.head, n_qubits: cfg.n_qubits, depth, seed, n_draws: grads.len(), variance, mean_gradient })
}

pub fn variance_scan(cfg: &VarianceScanConfig) -> Result<VarianceScanReport> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|s| cfg.seed.wrapping_add(s)).collect();
    let jobs: Vec<(u64, usize)> = seeds.iter().flat_map(|&s| cfg.depths.iter().map(move |&d| (s, d))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(s, d)| variance_cell(cfg, d, s))
        .collect::<Result<Vec<_>>>()?;

    let depths: Vec<f64> = cfg.depths.iter().map(|&d| d as f64).collect();
    let trends = seeds
        .iter()
        .map(|&seed| {
            let v: Vec<f64> = cells.iter().filter(|c| c.seed == seed).map(|c| c.variance).collect();
            let logs: Vec<f64> = v.iter().map(|x| x.ln()).collect();
            SeedTrend {
                seed,
                spearman: spearman(&depths, &v),
                last_over_first: v[v.len() - 1] / v[0],
                log_slope: linear_slope(&depths, &logs),
            }
        })
        .collect();

    let metadata = BTreeMap::from([
        ("probe_x".to_owned(), serde_json::json!(cfg.probe_x)),
        ("probe_target".to_owned(), serde_json::json!(cfg.probe_target())),
        ("param_index".to_owned(), serde_json::json!(cfg.param_index)),
        ("loss".to_owned(), serde_json::json!("mse")),
        ("seeds".to_owned(), serde_json::json!(seeds)),
        ("variance_estimator".to_owned(), serde_json::json!("population")),
    ]);
    Ok(VarianceScanReport {
        provenance: Provenance::new("variance-scan", cfg.seed, DEFAULT_EPS, cfg, metadata)?,
        head: cfg.head,
        n_qubits: cfg.n_qubits,
        depths: cfg.depths.clone(),
        cells,
        trends,
    })
}
