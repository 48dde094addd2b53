//! Loss surface on the plane of the two leading Hessian eigenvectors.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datasets::{make_trig_dataset, TrigConfig};
use super::report::{csv_bytes, CsvTable, Provenance, Report};
use crate::autodiff::{HessianDirections, Objective, DEFAULT_HESSIAN_STEP, MAX_HESSIAN_DIM};
use crate::circuit::{CircuitSpec, Entangler, ParameterSet};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::outputs::{Head, DEFAULT_EPS};
use crate::training::{train, TrainConfig};

fn default_qubits() -> usize {
    2
}
fn default_layers() -> usize {
    4
}
fn default_head() -> Head {
    Head::Pauli
}
fn default_outputs() -> usize {
    2
}
fn default_half_width() -> f64 {
    PI
}
fn default_resolution() -> usize {
    51
}
fn default_warmup() -> TrainConfig {
    TrainConfig { epochs: 10, ..TrainConfig::default() }
}
fn default_hessian_step() -> f64 {
    DEFAULT_HESSIAN_STEP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
    #[serde(default = "default_head")]
    pub head: Head,
    /// Trig targets fitted by the MSE loss.
    #[serde(default = "default_outputs")]
    pub n_outputs: usize,
    #[serde(default)]
    pub data: TrigConfig,
    #[serde(default = "default_half_width")]
    pub grid_half_width: f64,
    /// Odd, so the reference point sits on the grid.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Training run that produces the reference point when none is given;
    /// its seed also seeds the dataset.
    #[serde(default = "default_warmup")]
    pub warmup: TrainConfig,
    #[serde(default = "default_hessian_step")]
    pub hessian_step: f64,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            n_qubits: default_qubits(),
            n_layers: default_layers(),
            entangler: Entangler::default(),
            head: default_head(),
            n_outputs: default_outputs(),
            data: TrigConfig::default(),
            grid_half_width: default_half_width(),
            resolution: default_resolution(),
            warmup: default_warmup(),
            hessian_step: default_hessian_step(),
        }
    }
}

/// One grid cell of the surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub alpha: f64,
    pub beta: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub provenance: Provenance,
    pub head: Head,
    pub spec: CircuitSpec,
    /// Shared by both axes.
    pub grid: Vec<f64>,
    /// `surface[i][j]` is the loss at `reference + grid[i] v1 + grid[j] v2`.
    pub surface: Vec<Vec<f64>>,
    pub reference: ParameterSet,
    pub reference_loss: f64,
    pub directions: HessianDirections,
    pub hessian_asymmetry: f64,
}

impl LandscapeReport {
    pub fn center(&self) -> f64 {
        let c = self.grid.len() / 2;
        self.surface[c][c]
    }

    pub fn max(&self) -> f64 {
        self.surface.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rows(&self) -> Vec<LandscapeRow> {
        let mut rows = Vec::with_capacity(self.grid.len() * self.grid.len());
        for (i, &alpha) in self.grid.iter().enumerate() {
            for (j, &beta) in self.grid.iter().enumerate() {
                rows.push(LandscapeRow { alpha, beta, loss: self.surface[i][j] });
            }
        }
        rows
    }
}

impl Report for LandscapeReport {
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn csv_tables(&self) -> Result<Vec<CsvTable>> {
        Ok(vec![CsvTable { name: String::new(), body: csv_bytes(&self.rows())? }])
    }
}

/// Symmetric grid over `[-w, w]` whose middle entry is exactly zero.
pub fn symmetric_grid(half_width: f64, resolution: usize) -> Vec<f64> {
    let span = (resolution - 1) as f64;
    (0..resolution)
        .map(|i| half_width * (2.0 * i as f64 - span) / span)
        .collect()
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 3 || self.resolution.is_multiple_of(2) {
            return Err(Error::Config(format!("resolution must be odd and >= 3, got {}", self.resolution)));
        }
        if !(self.grid_half_width > 0.0 && self.grid_half_width.is_finite()) {
            return Err(Error::Config(format!("grid half-width must be positive, got {}", self.grid_half_width)));
        }
        let spec = self.spec()?;
        if spec.n_params() > MAX_HESSIAN_DIM {
            return Err(Error::Config(format!(
                "{} parameters exceed the Hessian limit of {MAX_HESSIAN_DIM}",
                spec.n_params()
            )));
        }
        self.warmup.validate()
    }

    pub fn spec(&self) -> Result<CircuitSpec> {
        CircuitSpec::new(self.n_qubits, self.n_layers, self.entangler)
    }

    pub fn objective(&self) -> Result<Objective> {
        Ok(Objective::new(self.spec()?, self.head, LossKind::Mse))
    }
}

/// Evaluates the loss surface around `reference`, or around the end point of
/// the warm-up run when `reference` is `None`.
pub fn loss_landscape(cfg: &LandscapeConfig, reference: Option<&ParameterSet>) -> Result<LandscapeReport> {
    cfg.validate()?;
    let objective = cfg.objective()?;
    let data = make_trig_dataset(&cfg.data, cfg.n_outputs, cfg.warmup.seed)?.samples();
    let reference = match reference {
        Some(p) => p.clone(),
        None => {
            let run = train(&objective, &cfg.warmup, &data)?;
            if let Some(f) = run.failure {
                return Err(Error::Numeric(format!("warm-up run failed: {f}")));
            }
            run.final_params
        }
    };
    objective.check_batch(&reference, &data)?;
    let reference_loss = objective.loss(&reference, &data)?;
    let hessian = objective.hessian(&reference, &data, cfg.hessian_step)?;
    let directions = crate::autodiff::top_hessian_directions(&hessian)?;
    if directions.degenerate {
        log::warn!("leading Hessian eigenvalues are degenerate; projection directions are not unique");
    }

    let grid = symmetric_grid(cfg.grid_half_width, cfg.resolution);
    let surface = grid
        .par_iter()
        .map(|&alpha| {
            grid.iter()
                .map(|&beta| {
                    let p: Vec<f64> = reference
                        .as_slice()
                        .iter()
                        .zip(directions.first.iter().zip(&directions.second))
                        .map(|(r, (a, b))| r + alpha * a + beta * b)
                        .collect();
                    objective.loss(&ParameterSet::new(p), &data)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let metadata = BTreeMap::from([
        ("loss".to_owned(), serde_json::json!("mse")),
        ("n_samples".to_owned(), serde_json::json!(data.len())),
        ("reference_source".to_owned(), serde_json::json!(if cfg.warmup.epochs == 0 { "init" } else { "warmup" })),
        ("degenerate_directions".to_owned(), serde_json::json!(directions.degenerate)),
    ]);
    Ok(LandscapeReport {
        provenance: Provenance::new("landscape", cfg.warmup.seed, DEFAULT_EPS, cfg, metadata)?,
        head: cfg.head,
        spec: objective.spec,
        grid,
        surface,
        reference,
        reference_loss,
        hessian_asymmetry: hessian.raw_asymmetry,
        directions,
    })
}
