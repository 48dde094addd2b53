//! Synthetic regression datasets.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Sample;
use crate::error::{Error, Result};

/// Inputs with their target rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
    /// Largest noise level used to generate the targets.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn samples(&self) -> Vec<Sample> {
        self.inputs
            .iter()
            .zip(&self.targets)
            .map(|(&x, t)| Sample::new(x, t.clone()))
            .collect()
    }
}

/// A closed interval `[lo, hi]` of the input axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

fn default_trig_points() -> usize {
    100
}
fn default_range() -> (f64, f64) {
    (0.0, TAU)
}
fn default_trig_noise() -> f64 {
    0.1
}

/// `sin x`, `cos x`, `-cos x` targets on an even grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigConfig {
    #[serde(default = "default_trig_points")]
    pub n_points: usize,
    /// Half-open input range `[start, end)`.
    #[serde(default = "default_range")]
    pub x_range: (f64, f64),
    #[serde(default = "default_trig_noise")]
    pub noise_sigma: f64,
}

impl Default for TrigConfig {
    fn default() -> Self {
        Self { n_points: default_trig_points(), x_range: default_range(), noise_sigma: default_trig_noise() }
    }
}

/// `n_points` evenly spaced inputs over the half-open range, starting at
/// its left end.
pub fn even_grid(n_points: usize, (start, end): (f64, f64)) -> Vec<f64> {
    let step = (end - start) / n_points as f64;
    (0..n_points).map(|i| start + step * i as f64).collect()
}

fn trig_clean(x: f64) -> [f64; 3] {
    [x.sin(), x.cos(), -x.cos()]
}

/// Noise is drawn from its own stream so a dataset and a training run
/// sharing one seed stay uncorrelated.
const NOISE_STREAM: u64 = 1;

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("invalid noise sigma {sigma}: {e}")))
}

/// Noise-free targets of the trig task at `x`.
pub fn trig_targets(x: f64, n_outputs: usize) -> Vec<f64> {
    trig_clean(x)[..n_outputs].to_vec()
}

pub fn make_trig_dataset(cfg: &TrigConfig, n_outputs: usize, seed: u64) -> Result<Dataset> {
    if cfg.n_points < 2 {
        return Err(Error::Config(format!("need at least 2 points, got {}", cfg.n_points)));
    }
    if !(2..=3).contains(&n_outputs) {
        return Err(Error::Config(format!("trig task has 2 or 3 outputs, got {n_outputs}")));
    }
    if !(cfg.noise_sigma >= 0.0) {
        return Err(Error::Config(format!("noise sigma must be >= 0, got {}", cfg.noise_sigma)));
    }
    let noise = normal(cfg.noise_sigma)?;
    let mut rng = noise_rng(seed);
    let inputs = even_grid(cfg.n_points, cfg.x_range);
    let targets = inputs
        .iter()
        .map(|&x| {
            trig_clean(x)[..n_outputs]
                .iter()
                .map(|c| c + noise.sample(&mut rng))
                .collect()
        })
        .collect();
    Ok(Dataset { inputs, targets, noise_sigma: cfg.noise_sigma, seed })
}

fn default_sparse_points() -> usize {
    100
}
fn default_gap() -> Interval {
    Interval::new(2.5, 4.0)
}
fn default_noisy() -> Interval {
    Interval::new(4.5, 6.0)
}
fn default_quiet() -> Interval {
    Interval::new(0.5, 2.0)
}
fn default_quiet_sigma() -> f64 {
    0.02
}
fn default_noisy_sigma() -> f64 {
    0.25
}

/// Layout of the sparse, heteroscedastic `sin x` dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseSineConfig {
    /// Grid size over `x_range` before the gap is removed.
    #[serde(default = "default_sparse_points")]
    pub n_points: usize,
    #[serde(default = "default_range")]
    pub x_range: (f64, f64),
    /// No samples are drawn here.
    #[serde(default = "default_gap")]
    pub gap: Interval,
    /// Noise level `noisy_sigma` applies here.
    #[serde(default = "default_noisy")]
    pub noisy: Interval,
    /// Densely sampled low-noise reference region used for comparisons.
    #[serde(default = "default_quiet")]
    pub quiet: Interval,
    #[serde(default = "default_quiet_sigma")]
    pub quiet_sigma: f64,
    #[serde(default = "default_noisy_sigma")]
    pub noisy_sigma: f64,
}

impl Default for SparseSineConfig {
    fn default() -> Self {
        Self {
            n_points: default_sparse_points(),
            x_range: default_range(),
            gap: default_gap(),
            noisy: default_noisy(),
            quiet: default_quiet(),
            quiet_sigma: default_quiet_sigma(),
            noisy_sigma: default_noisy_sigma(),
        }
    }
}

impl SparseSineConfig {
    pub fn sigma_at(&self, x: f64) -> f64 {
        if self.noisy.contains(x) {
            self.noisy_sigma
        } else {
            self.quiet_sigma
        }
    }
}

pub fn make_sparse_noisy_sine(cfg: &SparseSineConfig, seed: u64) -> Result<Dataset> {
    if cfg.n_points < 2 {
        return Err(Error::Config(format!("need at least 2 points, got {}", cfg.n_points)));
    }
    let quiet = normal(cfg.quiet_sigma)?;
    let noisy = normal(cfg.noisy_sigma)?;
    let mut rng = noise_rng(seed);
    let inputs: Vec<f64> = even_grid(cfg.n_points, cfg.x_range)
        .into_iter()
        .filter(|&x| !cfg.gap.contains(x))
        .collect();
    if inputs.len() < 2 {
        return Err(Error::Config("the gap removes all samples".into()));
    }
    let targets = inputs
        .iter()
        .map(|&x| {
            let dist = if cfg.noisy.contains(x) { &noisy } else { &quiet };
            vec![x.sin() + dist.sample(&mut rng)]
        })
        .collect();
    Ok(Dataset { inputs, targets, noise_sigma: cfg.quiet_sigma.max(cfg.noisy_sigma), seed })
}
