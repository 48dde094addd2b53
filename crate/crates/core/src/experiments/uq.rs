//! Deep-ensemble uncertainty split into aleatoric and epistemic parts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::datasets::{even_grid, make_sparse_noisy_sine, Dataset, Interval, SparseSineConfig};
use super::regression::MemberSummary;
use super::report::{csv_bytes, CsvTable, Provenance, Report};
use super::variance::mean_and_variance;
use crate::autodiff::Objective;
use crate::circuit::{CircuitSpec, Entangler};
use crate::error::{Error, Result};
use crate::loss::{to_gaussian, GaussianPrediction, LossKind};
use crate::outputs::{Head, DEFAULT_EPS};
use crate::training::{train_ensemble, TrainConfig};

fn default_qubits() -> usize {
    2
}
fn default_layers() -> usize {
    3
}
fn default_ensemble() -> usize {
    10
}
fn default_grid() -> usize {
    200
}
fn default_logvar_index() -> usize {
    1
}
fn default_eps() -> f64 {
    DEFAULT_EPS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UqConfig {
    #[serde(default)]
    pub data: SparseSineConfig,
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub mean_index: usize,
    #[serde(default = "default_logvar_index")]
    pub logvar_index: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

impl Default for UqConfig {
    fn default() -> Self {
        Self {
            data: SparseSineConfig::default(),
            n_qubits: default_qubits(),
            n_layers: default_layers(),
            entangler: Entangler::default(),
            ensemble_size: default_ensemble(),
            train: TrainConfig::default(),
            mean_index: 0,
            logvar_index: default_logvar_index(),
            grid_points: default_grid(),
            eps: default_eps(),
        }
    }
}

impl UqConfig {
    pub fn objective(&self) -> Result<Objective> {
        let spec = CircuitSpec::new(self.n_qubits, self.n_layers, self.entangler)?;
        let loss = LossKind::Nll { mean_index: self.mean_index, logvar_index: self.logvar_index };
        crate::outputs::check_eps(self.eps)?;
        let objective = Objective::new(spec, Head::Lrp, loss).with_eps(self.eps);
        objective.loss.validate(objective.n_outputs(), 1)?;
        Ok(objective)
    }
}

/// Variance decomposition at one grid input, in target units squared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UqRow {
    pub x: f64,
    /// Ensemble mean of the predicted means.
    pub mean: f64,
    /// Mean over members of the predicted variance.
    pub aleatoric: f64,
    /// Population variance over members of the predicted mean.
    pub epistemic: f64,
    pub total: f64,
}

/// Interval averages used to compare regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub gap_epistemic: f64,
    pub quiet_epistemic: f64,
    pub noisy_aleatoric: f64,
    pub quiet_aleatoric: f64,
}

impl RegionSummary {
    pub fn epistemic_ratio(&self) -> f64 {
        self.gap_epistemic / self.quiet_epistemic
    }

    pub fn aleatoric_ratio(&self) -> f64 {
        self.noisy_aleatoric / self.quiet_aleatoric
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub provenance: Provenance,
    pub dataset: Dataset,
    pub members: Vec<MemberSummary>,
    /// Seeds of the members that entered the decomposition.
    pub used_seeds: Vec<u64>,
    /// Seeds excluded because their variance output hit the clamp.
    pub saturated_seeds: Vec<u64>,
    pub warnings: Vec<String>,
    pub rows: Vec<UqRow>,
    pub regions: RegionSummary,
}

impl Report for UncertaintyReport {
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn csv_tables(&self) -> Result<Vec<CsvTable>> {
        Ok(vec![CsvTable { name: String::new(), body: csv_bytes(&self.rows)? }])
    }
}

/// Aleatoric, epistemic and total variance from the members' predictive
/// normals at one input.
pub fn decompose(x: f64, preds: &[GaussianPrediction]) -> UqRow {
    let mus: Vec<f64> = preds.iter().map(|p| p.mu).collect();
    let (mean, epistemic) = mean_and_variance(&mus);
    let aleatoric = preds.iter().map(GaussianPrediction::variance).sum::<f64>() / preds.len() as f64;
    UqRow { x, mean, aleatoric, epistemic, total: aleatoric + epistemic }
}

fn region_mean(rows: &[UqRow], region: Interval, f: impl Fn(&UqRow) -> f64) -> f64 {
    let v: Vec<f64> = rows.iter().filter(|r| region.contains(r.x)).map(f).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn uq_experiment(cfg: &UqConfig) -> Result<UncertaintyReport> {
    cfg.train.validate()?;
    if cfg.grid_points < 2 {
        return Err(Error::Config(format!("need at least 2 grid points, got {}", cfg.grid_points)));
    }
    let objective = cfg.objective()?;
    let dataset = make_sparse_noisy_sine(&cfg.data, cfg.train.seed)?;
    let ensemble = train_ensemble(&objective, &cfg.train, &dataset.samples(), cfg.ensemble_size)?;
    let members: Vec<MemberSummary> = ensemble
        .seeds
        .iter()
        .zip(&ensemble.members)
        .map(|(&s, r)| MemberSummary::from_result(s, r))
        .collect();

    let grid = even_grid(cfg.grid_points, cfg.data.x_range);
    let mut used = Vec::new();
    let mut used_seeds = Vec::new();
    let mut saturated_seeds = Vec::new();
    for (&seed, m) in ensemble.seeds.iter().zip(&ensemble.members) {
        if !m.succeeded() {
            continue;
        }
        let preds = grid
            .iter()
            .map(|&x| {
                let y = objective.predict(&m.final_params, x)?;
                to_gaussian(&y, cfg.mean_index, cfg.logvar_index, cfg.eps)
            })
            .collect::<Result<Vec<_>>>()?;
        if preds.iter().any(|p| p.saturated) {
            saturated_seeds.push(seed);
        } else {
            used.push(preds);
            used_seeds.push(seed);
        }
    }

    let mut warnings = Vec::new();
    if 2 * saturated_seeds.len() > cfg.ensemble_size {
        let w = format!(
            "{} of {} members saturated the variance clamp and were excluded",
            saturated_seeds.len(),
            cfg.ensemble_size
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    if used.len() < 2 {
        return Err(Error::Numeric(format!("only {} usable ensemble members; need at least 2", used.len())));
    }

    let rows: Vec<UqRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| decompose(x, &used.iter().map(|m| m[i]).collect::<Vec<_>>()))
        .collect();
    let d = &cfg.data;
    let regions = RegionSummary {
        gap_epistemic: region_mean(&rows, d.gap, |r| r.epistemic),
        quiet_epistemic: region_mean(&rows, d.quiet, |r| r.epistemic),
        noisy_aleatoric: region_mean(&rows, d.noisy, |r| r.aleatoric),
        quiet_aleatoric: region_mean(&rows, d.quiet, |r| r.aleatoric),
    };

    let metadata = BTreeMap::from([
        ("loss".to_owned(), serde_json::json!("gaussian_nll")),
        ("gap_interval".to_owned(), serde_json::json!(d.gap)),
        ("noisy_interval".to_owned(), serde_json::json!(d.noisy)),
        ("quiet_interval".to_owned(), serde_json::json!(d.quiet)),
        ("x_range".to_owned(), serde_json::json!(d.x_range)),
        ("member_seeds".to_owned(), serde_json::json!(ensemble.seeds)),
        ("data_seed".to_owned(), serde_json::json!(dataset.seed)),
        ("epistemic_estimator".to_owned(), serde_json::json!("population")),
    ]);
    Ok(UncertaintyReport {
        provenance: Provenance::new("uq", cfg.train.seed, cfg.eps, cfg, metadata)?,
        dataset,
        members,
        used_seeds,
        saturated_seeds,
        warnings,
        rows,
        regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(mu: f64, sigma: f64) -> GaussianPrediction {
        GaussianPrediction { mu, sigma, saturated: false }
    }

    #[test]
    fn decomposition_by_hand() {
        let r = decompose(0.0, &[gp(1.0, 0.5), gp(3.0, 1.5)]);
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.epistemic, 1.0);
        assert_eq!(r.aleatoric, 1.25);
        assert_eq!(r.total, 2.25);
    }

    #[test]
    fn identical_members_have_no_epistemic_part() {
        let r = decompose(0.0, &[gp(0.3, 0.2); 4]);
        assert_eq!(r.epistemic, 0.0);
        assert!((r.aleatoric - 0.04).abs() < 1e-17);
    }

    #[test]
    fn small_run_is_additive() {
        let cfg = UqConfig {
            ensemble_size: 2,
            grid_points: 40,
            train: TrainConfig { epochs: 2, ..TrainConfig::default() },
            ..UqConfig::default()
        };
        let r = uq_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 40);
        for row in &r.rows {
            assert!(row.aleatoric >= 0.0 && row.epistemic >= 0.0);
            assert!((row.total - row.aleatoric - row.epistemic).abs() <= 1e-12);
        }
    }

    #[test]
    fn index_collision_is_rejected() {
        let cfg = UqConfig { logvar_index: 0, ..UqConfig::default() };
        assert!(uq_experiment(&cfg).unwrap_err().is_config());
    }
}
