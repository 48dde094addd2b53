//! Statevector simulation, exact gradients and training for parameterized
//! quantum circuits read out either through Pauli-Z expectations or through
//! log-ratio probabilities (LRP) of the basis states.
//!
//! The LRP head maps the `2^n` basis probabilities of an `n`-qubit circuit to
//! `2^n - 1` unbounded outputs `log(p_i / p_last)`, which makes one small
//! circuit a multi-output regressor.

pub mod autodiff;
pub mod circuit;
pub mod error;
pub mod experiments;
pub mod loss;
pub mod outputs;
pub mod statevector;
pub mod training;
pub mod verify;

pub use autodiff::{HessianDirections, HessianMatrix, Objective, Sample};
pub use circuit::{CircuitSpec, Entangler, ParameterSet};
pub use error::{Error, Result};
pub use loss::{GaussianPrediction, LossKind};
pub use outputs::{Head, OutputVector, DEFAULT_EPS};
pub use statevector::{Gate, ProbabilityVector, StateVector};
pub use training::{EnsembleResult, TrainConfig, TrainResult};
