//! Output heads turning a final state into regression outputs.
//!
//! * [`Head::Pauli`]: one `<Z_j>` per qubit, bounded in `[-1, 1]`.
//! * [`Head::Lrp`]: `2^n - 1` log-ratio probabilities
//!   `y_i = log(p_i / p_last)` where `p_last` belongs to `|1...1>`.
//!   Probabilities are clamped below at `eps` so the outputs stay finite;
//!   the clamp is flat, i.e. contributes zero derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{ProbabilityVector, StateVector};

/// Default lower clamp for probabilities entering a logarithm.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Largest accepted clamp value.
pub const MAX_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Pauli,
    Lrp,
}

impl std::str::FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pauli" => Ok(Head::Pauli),
            "lrp" => Ok(Head::Lrp),
            other => Err(Error::Config(format!("unknown head {other:?}"))),
        }
    }
}

impl std::fmt::Display for Head {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Head::Pauli => "pauli",
            Head::Lrp => "lrp",
        })
    }
}

impl Head {
    /// Number of outputs the head produces on `n_qubits`.
    pub fn output_len(self, n_qubits: usize) -> usize {
        match self {
            Head::Pauli => n_qubits,
            Head::Lrp => (1 << n_qubits) - 1,
        }
    }

    /// Evaluates the head on basis probabilities.
    pub fn evaluate(self, probs: &[f64], eps: f64) -> Vec<f64> {
        match self {
            Head::Pauli => pauli_from_probs(probs),
            Head::Lrp => lrp_values(probs, eps),
        }
    }

    /// Pulls a gradient with respect to the first `d_out.len()` outputs back
    /// to a gradient with respect to each basis probability.
    pub(crate) fn pullback(self, probs: &[f64], eps: f64, d_out: &[f64]) -> Vec<f64> {
        let dim = probs.len();
        let n = dim.trailing_zeros() as usize;
        match self {
            Head::Pauli => (0..dim)
                .map(|i| {
                    d_out
                        .iter()
                        .enumerate()
                        .map(|(j, g)| if i & (1 << (n - 1 - j)) == 0 { *g } else { -*g })
                        .sum()
                })
                .collect(),
            Head::Lrp => {
                let mut d_probs = vec![0.0; dim];
                let mut d_last = 0.0;
                for (i, g) in d_out.iter().enumerate() {
                    if probs[i] > eps {
                        d_probs[i] = g / probs[i];
                    }
                    d_last -= g;
                }
                let p_last = probs[dim - 1];
                d_probs[dim - 1] = if p_last > eps { d_last / p_last } else { 0.0 };
                d_probs
            }
        }
    }
}

/// Regression outputs tagged with the head that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputVector {
    pub mode: Head,
    pub values: Vec<f64>,
}

impl OutputVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= MAX_EPS) {
        return Err(Error::Config(format!("eps must be in (0, {MAX_EPS:e}], got {eps:e}")));
    }
    Ok(())
}

fn lrp_values(probs: &[f64], eps: f64) -> Vec<f64> {
    let (last, rest) = probs.split_last().expect("non-empty probabilities");
    let log_last = last.max(eps).ln();
    rest.iter().map(|p| p.max(eps).ln() - log_last).collect()
}

fn pauli_from_probs(probs: &[f64]) -> Vec<f64> {
    let n = probs.len().trailing_zeros() as usize;
    (0..n)
        .map(|q| {
            let mask = 1 << (n - 1 - q);
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| if i & mask == 0 { *p } else { -*p })
                .sum()
        })
        .collect()
}

/// `y_i = log(max(p_i, eps) / max(p_last, eps))` for `i = 0..2^n-2`.
pub fn lrp_outputs(probs: &ProbabilityVector, eps: f64) -> Result<OutputVector> {
    check_eps(eps)?;
    Ok(OutputVector { mode: Head::Lrp, values: lrp_values(probs.as_slice(), eps) })
}

/// Inverse of the unclamped LRP map: `p_i = e^{y_i} / (1 + sum_j e^{y_j})`.
pub fn lrp_inverse(y: &OutputVector) -> Result<ProbabilityVector> {
    if y.mode != Head::Lrp {
        return Err(Error::Input("lrp_inverse needs an lrp-mode output vector".into()));
    }
    let dim = y.values.len() + 1;
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Input(format!("lrp output length {} is not 2^n - 1", y.values.len())));
    }
    if let Some(v) = y.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite lrp output {v}")));
    }
    // The sacrificed state carries log-ratio 0.
    let shift = y.values.iter().copied().fold(0.0f64, f64::max);
    let mut weights: Vec<f64> = y.values.iter().map(|v| (v - shift).exp()).collect();
    weights.push((-shift).exp());
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(ProbabilityVector::from_raw(weights))
}

/// `<Z_j>` for every qubit `j`.
pub fn pauli_outputs(state: &StateVector) -> OutputVector {
    let values = (0..state.n_qubits())
        .map(|q| state.pauli_z_expectation(q).expect("qubit in range"))
        .collect();
    OutputVector { mode: Head::Pauli, values }
}
