//! Parameter initialization, Adam, mini-batch training and deep ensembles.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Objective, Sample};
use crate::circuit::{CircuitSpec, ParameterSet};
use crate::error::{Error, Result};

/// Parameter initialization scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// i.i.d. `Uniform[0, 2 pi)` angles.
    #[default]
    #[serde(rename = "uniform_0_2pi")]
    Uniform0To2Pi,
}

fn default_lr() -> f64 {
    0.1
}
fn default_batch() -> usize {
    64
}
fn default_epochs() -> usize {
    100
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps_opt() -> f64 {
    1e-8
}

/// Optimizer and loop settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: Init,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps_opt")]
    pub eps_opt: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_lr(),
            batch_size: default_batch(),
            epochs: default_epochs(),
            seed: 0,
            init: Init::default(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps_opt: default_eps_opt(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.eps_opt > 0.0) {
            return Err(Error::Config("eps_opt must be positive".into()));
        }
        Ok(())
    }
}

/// `Uniform[0, 2 pi)` angles from a seeded ChaCha8 stream.
pub fn init_params(spec: &CircuitSpec, seed: u64) -> ParameterSet {
    init_params_from(spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn init_params_from(spec: &CircuitSpec, rng: &mut ChaCha8Rng) -> ParameterSet {
    ParameterSet::new((0..spec.n_params()).map(|_| rng.random_range(0.0..TAU)).collect())
}

/// First and second moment accumulators of Adam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) -> Result<()> {
        if params.len() != grad.len() || grad.len() != self.m.len() {
            return Err(Error::Input(format!(
                "adam shape mismatch: {} params, {} grads, {} moments",
                params.len(),
                grad.len(),
                self.m.len()
            )));
        }
        if let Some((j, g)) = grad.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient component {j}: {g}")));
        }
        self.t += 1;
        let t = self.t as i32;
        let bias1 = 1.0 - cfg.beta1.powi(t);
        let bias2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps_opt);
        }
        Ok(())
    }
}

/// Outcome of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub initial_params: ParameterSet,
    pub final_params: ParameterSet,
    /// Sample-weighted mean of the mini-batch losses seen during each epoch.
    pub loss_history: Vec<f64>,
    /// Full-dataset loss at `final_params`.
    pub final_loss: f64,
    pub wall_time_s: f64,
    pub config: TrainConfig,
    /// Set when training aborted; `loss_history` then holds the completed
    /// epochs only.
    pub failure: Option<String>,
}

impl TrainResult {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Shuffled mini-batch Adam for `cfg.epochs` epochs. The last partial batch
/// of every epoch is kept. Numeric failures stop the run and are reported in
/// [`TrainResult::failure`] rather than as an error.
pub fn train(objective: &Objective, cfg: &TrainConfig, dataset: &[Sample]) -> Result<TrainResult> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Input("training dataset is empty".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial_params = init_params_from(&objective.spec, &mut rng);
    objective.check_batch(&initial_params, dataset)?;

    let mut params = initial_params.clone();
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut failure = None;
    let mut batch = Vec::with_capacity(cfg.batch_size);

    'epochs: for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i].clone()));
            let step = objective
                .loss_and_gradient(&params, &batch)
                .and_then(|(loss, grad)| adam.step(params.as_mut_slice(), &grad, cfg).map(|_| loss));
            match step {
                Ok(loss) => weighted += loss * chunk.len() as f64,
                Err(e) => {
                    failure = Some(format!("epoch {epoch}: {e}"));
                    break 'epochs;
                }
            }
        }
        loss_history.push(weighted / dataset.len() as f64);
    }

    let final_loss = match objective.loss(&params, dataset) {
        Ok(l) => l,
        Err(e) => {
            failure.get_or_insert_with(|| format!("final evaluation: {e}"));
            f64::NAN
        }
    };
    Ok(TrainResult {
        initial_params,
        final_params: params,
        loss_history,
        final_loss,
        wall_time_s: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        failure,
    })
}

/// Independently trained members sharing one architecture and config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub members: Vec<TrainResult>,
    pub seeds: Vec<u64>,
}

impl EnsembleResult {
    pub fn successful(&self) -> impl Iterator<Item = &TrainResult> {
        self.members.iter().filter(|m| m.succeeded())
    }
}

/// `k` members with seeds `cfg.seed + 0 .. cfg.seed + k - 1`, trained in
/// parallel on the current rayon pool.
pub fn train_ensemble(objective: &Objective, cfg: &TrainConfig, dataset: &[Sample], k: usize) -> Result<EnsembleResult> {
    if k < 2 {
        return Err(Error::Config(format!("an ensemble needs at least 2 members, got {k}")));
    }
    let seeds: Vec<u64> = (0..k as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    train_with_seeds(objective, cfg, dataset, &seeds)
}

/// Trains one member per seed. Fails unless at least half of the members
/// finish without a numeric failure.
pub fn train_with_seeds(objective: &Objective, cfg: &TrainConfig, dataset: &[Sample], seeds: &[u64]) -> Result<EnsembleResult> {
    let members = seeds
        .par_iter()
        .map(|&seed| train(objective, &TrainConfig { seed, ..cfg.clone() }, dataset))
        .collect::<Result<Vec<_>>>()?;
    let ok = members.iter().filter(|m| m.succeeded()).count();
    for (seed, m) in seeds.iter().zip(&members) {
        if let Some(f) = &m.failure {
            log::warn!("ensemble member with seed {seed} failed: {f}");
        }
    }
    if 2 * ok < members.len() {
        return Err(Error::Numeric(format!("only {ok} of {} ensemble members trained successfully", members.len())));
    }
    Ok(EnsembleResult { members, seeds: seeds.to_vec() })
}
