//! Training objectives: mean squared error and Gaussian negative log-likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outputs::OutputVector;

/// `0.5 * ln(2 pi)`
pub const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_7;

/// Distance from the clamp ceiling `ln(1/eps)` within which a log-variance
/// output is reported as saturated.
pub const SATURATION_MARGIN: f64 = 0.1;

/// Mean over output components of the squared error.
pub fn mse(yhat: &[f64], ytrue: &[f64]) -> Result<f64> {
    if yhat.len() != ytrue.len() {
        return Err(Error::Input(format!(
            "mse length mismatch: {} predictions vs {} targets",
            yhat.len(),
            ytrue.len()
        )));
    }
    if yhat.is_empty() {
        return Err(Error::Input("mse of empty vectors".into()));
    }
    Ok(yhat.iter().zip(ytrue).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / yhat.len() as f64)
}

/// Arithmetic mean of per-sample losses.
pub fn batch_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Predictive normal distribution read off two model outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mu: f64,
    pub sigma: f64,
    /// The log-variance output sits at the LRP clamp boundary.
    pub saturated: bool,
}

impl GaussianPrediction {
    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Reads `mu = y[mean_index]` and `sigma^2 = exp(y[logvar_index])`.
pub fn to_gaussian(
    yhat: &OutputVector,
    mean_index: usize,
    logvar_index: usize,
    eps: f64,
) -> Result<GaussianPrediction> {
    check_gaussian_indices(mean_index, logvar_index, yhat.len())?;
    let logvar = yhat.values[logvar_index];
    let ceiling = (1.0 / eps).ln();
    Ok(GaussianPrediction {
        mu: yhat.values[mean_index],
        sigma: (0.5 * logvar).exp(),
        saturated: logvar.abs() >= ceiling - SATURATION_MARGIN,
    })
}

fn check_gaussian_indices(mean_index: usize, logvar_index: usize, len: usize) -> Result<()> {
    if mean_index == logvar_index {
        return Err(Error::Config(format!(
            "mean and log-variance share output index {mean_index}"
        )));
    }
    if mean_index.max(logvar_index) >= len {
        return Err(Error::Index(format!(
            "gaussian indices ({mean_index}, {logvar_index}) out of range for {len} outputs"
        )));
    }
    Ok(())
}

/// `0.5 ln(2 pi sigma^2) + (y - mu)^2 / (2 sigma^2)`
pub fn gaussian_nll(pred: &GaussianPrediction, y: f64) -> f64 {
    let var = pred.variance();
    HALF_LN_TWO_PI + 0.5 * var.ln() + (y - pred.mu).powi(2) / (2.0 * var)
}

/// Which objective a model is trained against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum LossKind {
    /// MSE over the first `targets.len()` outputs.
    Mse,
    /// Gaussian NLL of a scalar target with `mu = y[mean_index]` and
    /// `ln sigma^2 = y[logvar_index]`.
    Nll { mean_index: usize, logvar_index: usize },
}

impl LossKind {
    /// NLL reading the mean from output 0 and log-variance from output 1.
    pub const NLL: LossKind = LossKind::Nll { mean_index: 0, logvar_index: 1 };

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Nll { .. } => "nll",
        }
    }

    /// Checks the loss can be evaluated on `n_outputs` outputs with targets of
    /// length `target_len`.
    pub fn validate(&self, n_outputs: usize, target_len: usize) -> Result<()> {
        match *self {
            LossKind::Mse => {
                if target_len == 0 || target_len > n_outputs {
                    return Err(Error::Config(format!(
                        "{target_len} targets cannot be matched against {n_outputs} outputs"
                    )));
                }
                Ok(())
            }
            LossKind::Nll { mean_index, logvar_index } => {
                check_gaussian_indices(mean_index, logvar_index, n_outputs)?;
                if target_len != 1 {
                    return Err(Error::Config(format!(
                        "nll expects scalar targets, got {target_len} columns"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Per-sample loss value. Assumes [`LossKind::validate`] passed.
    pub fn value(&self, yhat: &[f64], target: &[f64]) -> f64 {
        match *self {
            LossKind::Mse => {
                let m = target.len();
                yhat[..m].iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / m as f64
            }
            LossKind::Nll { mean_index, logvar_index } => {
                let s = yhat[logvar_index];
                let r = target[0] - yhat[mean_index];
                HALF_LN_TWO_PI + 0.5 * s + 0.5 * r * r * (-s).exp()
            }
        }
    }

    /// Per-sample derivative with respect to the model outputs. The returned
    /// vector may be shorter than `yhat`; missing entries are zero.
    pub fn output_gradient(&self, yhat: &[f64], target: &[f64]) -> Vec<f64> {
        match *self {
            LossKind::Mse => {
                let m = target.len() as f64;
                yhat.iter().zip(target).map(|(a, b)| 2.0 * (a - b) / m).collect()
            }
            LossKind::Nll { mean_index, logvar_index } => {
                let mut g = vec![0.0; mean_index.max(logvar_index) + 1];
                let inv_var = (-yhat[logvar_index]).exp();
                let r = target[0] - yhat[mean_index];
                g[mean_index] = -r * inv_var;
                g[logvar_index] = 0.5 - 0.5 * r * r * inv_var;
                g
            }
        }
    }
}
