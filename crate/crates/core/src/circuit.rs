//! Layered rotation/entangler circuit with an Rx angle embedding.
//!
//! The circuit applied to `|0...0>` is
//!
//! ```text
//! [U_ent * U_rot(L)] ... [U_ent * U_rot(1)] * (Rx(x) on every qubit)
//! ```
//!
//! where `U_rot(l)` applies `Rz(omega) Ry(theta) Rz(phi)` to each qubit
//! (`Rz(phi)` acts first) and `U_ent` is a fixed CNOT pattern applied in
//! every layer, including the last.
//!
//! Parameters are stored flat in `(layer, qubit, angle)` order with angle
//! `0 = phi`, `1 = theta`, `2 = omega`; see [`CircuitSpec::param_index`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{Gate, StateVector, DEFAULT_MAX_QUBITS};

/// Number of rotation angles per qubit per layer.
pub const ANGLES_PER_ROTATION: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    /// `CNOT(j, j+1)` for `j = 0..n-2`.
    #[default]
    Chain,
    /// Chain plus `CNOT(n-1, 0)` when `n > 2`.
    Ring,
}

impl std::str::FromStr for Entangler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Entangler::Chain),
            "ring" => Ok(Entangler::Ring),
            other => Err(Error::Config(format!("unknown entangler {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuitSpec {
    n_qubits: usize,
    n_layers: usize,
    #[serde(default)]
    entangler: Entangler,
}

/// Circuit topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCircuitSpec")]
pub struct CircuitSpec {
    n_qubits: usize,
    n_layers: usize,
    entangler: Entangler,
}

impl TryFrom<RawCircuitSpec> for CircuitSpec {
    type Error = Error;

    fn try_from(raw: RawCircuitSpec) -> Result<Self> {
        CircuitSpec::new(raw.n_qubits, raw.n_layers, raw.entangler)
    }
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, n_layers: usize, entangler: Entangler) -> Result<Self> {
        if n_qubits == 0 || n_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={DEFAULT_MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if n_layers == 0 {
            return Err(Error::Config("n_layers must be >= 1".into()));
        }
        Ok(Self { n_qubits, n_layers, entangler })
    }

    /// Chain-entangled circuit.
    pub fn chain(n_qubits: usize, n_layers: usize) -> Result<Self> {
        Self::new(n_qubits, n_layers, Entangler::Chain)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn entangler(&self) -> Entangler {
        self.entangler
    }

    pub fn n_params(&self) -> usize {
        ANGLES_PER_ROTATION * self.n_layers * self.n_qubits
    }

    /// Flat index of `(layer, qubit, angle)`.
    #[inline]
    pub fn param_index(&self, layer: usize, qubit: usize, angle: usize) -> usize {
        (layer * self.n_qubits + qubit) * ANGLES_PER_ROTATION + angle
    }

    /// `(control, target)` pairs of one entangler layer, in application order.
    pub fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        if self.entangler == Entangler::Ring && n > 2 {
            pairs.push((n - 1, 0));
        }
        pairs
    }

    pub fn check_params(&self, params: &ParameterSet) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Config(format!(
                "parameter count {} does not match circuit ({} layers x {} qubits x 3 = {})",
                params.len(),
                self.n_layers,
                self.n_qubits,
                self.n_params()
            )));
        }
        Ok(())
    }

    /// Gate sequence of the circuit for input `x`.
    pub(crate) fn ops(&self, x: f64) -> Vec<Op> {
        let mut ops = Vec::with_capacity(self.n_qubits * (1 + 3 * self.n_layers) + self.n_layers * self.n_qubits);
        let embed = Gate::rx(x);
        for q in 0..self.n_qubits {
            ops.push(Op::Fixed(embed, q));
        }
        let pairs = self.entangler_pairs();
        for l in 0..self.n_layers {
            for q in 0..self.n_qubits {
                ops.push(Op::Rot(Axis::Z, self.param_index(l, q, 0), q));
                ops.push(Op::Rot(Axis::Y, self.param_index(l, q, 1), q));
                ops.push(Op::Rot(Axis::Z, self.param_index(l, q, 2), q));
            }
            ops.extend(pairs.iter().map(|&(c, t)| Op::Cnot(c, t)));
        }
        ops
    }
}

/// Trainable angles, flat in `(layer, qubit, angle)` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSet(Vec<f64>);

impl ParameterSet {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles)
    }

    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self(vec![0.0; spec.n_params()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Axis {
    Y,
    Z,
}

impl Axis {
    pub(crate) fn gate(self, angle: f64) -> Gate {
        match self {
            Axis::Y => Gate::ry(angle),
            Axis::Z => Gate::rz(angle),
        }
    }

    pub(crate) fn generator(self) -> Gate {
        match self {
            Axis::Y => Gate::PAULI_Y,
            Axis::Z => Gate::PAULI_Z,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Op {
    Fixed(Gate, usize),
    /// Rotation about `axis` by the flat parameter at the given index.
    Rot(Axis, usize, usize),
    Cnot(usize, usize),
}

/// `Rz(omega) Ry(theta) Rz(phi)` in closed form.
pub fn rot_gate(phi: f64, theta: f64, omega: f64) -> Result<Gate> {
    if !(phi.is_finite() && theta.is_finite() && omega.is_finite()) {
        return Err(Error::Input(format!("non-finite rotation angle ({phi}, {theta}, {omega})")));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let sum = (phi + omega) / 2.0;
    let diff = (phi - omega) / 2.0;
    Ok(Gate([
        [Complex64::from_polar(c, -sum), -Complex64::from_polar(s, diff)],
        [Complex64::from_polar(s, -diff), Complex64::from_polar(c, sum)],
    ]))
}

/// Applies `Rx(x)` to every qubit.
pub fn embed_input(state: &mut StateVector, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Input(format!("non-finite input {x}")));
    }
    let gate = Gate::rx(x);
    for q in 0..state.n_qubits() {
        state.apply_gate_unchecked(&gate, q);
    }
    Ok(())
}

pub(crate) fn apply_ops(state: &mut StateVector, ops: &[Op], params: &[f64]) {
    for op in ops {
        match *op {
            Op::Fixed(ref g, q) => state.apply_gate_unchecked(g, q),
            Op::Rot(axis, p, q) => state.apply_gate_unchecked(&axis.gate(params[p]), q),
            Op::Cnot(c, t) => state.apply_cnot_unchecked(c, t),
        }
    }
}

/// Final state `U(params) Embed(x) |0...0>`.
pub fn forward(spec: &CircuitSpec, params: &ParameterSet, x: f64) -> Result<StateVector> {
    spec.check_params(params)?;
    if !x.is_finite() {
        return Err(Error::Input(format!("non-finite input {x}")));
    }
    if let Some(a) = params.as_slice().iter().find(|a| !a.is_finite()) {
        return Err(Error::Input(format!("non-finite parameter {a}")));
    }
    let mut state = StateVector::zero_state(spec.n_qubits())?;
    apply_ops(&mut state, &spec.ops(x), params.as_slice());
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn rot_gate_examples() {
        assert!(rot_gate(0.0, 0.0, 0.0).unwrap().max_abs_diff(&Gate::IDENTITY) < 1e-15);
        let ry_pi = rot_gate(0.0, PI, 0.0).unwrap();
        let want = Gate([
            [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)],
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        ]);
        assert!(ry_pi.max_abs_diff(&want) < 1e-15);
        assert!(rot_gate(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn rot_gate_matches_rz_ry_rz_product() {
        let (phi, theta, omega) = (FRAC_PI_2, FRAC_PI_3, FRAC_PI_4);
        let product = Gate::rz(omega).matmul(&Gate::ry(theta)).matmul(&Gate::rz(phi));
        let closed = rot_gate(phi, theta, omega).unwrap();
        assert!(closed.max_abs_diff(&product) < 1e-12);
        assert!(closed.unitarity_defect() < 1e-12);
    }

    #[test]
    fn embedding_examples() {
        let mut s = StateVector::zero_state(3).unwrap();
        embed_input(&mut s, 0.0).unwrap();
        assert_eq!(s, StateVector::zero_state(3).unwrap());

        let mut s = StateVector::zero_state(1).unwrap();
        embed_input(&mut s, PI).unwrap();
        assert!((s.probabilities().as_slice()[1] - 1.0).abs() < 1e-12);

        let mut s = StateVector::zero_state(2).unwrap();
        embed_input(&mut s, FRAC_PI_2).unwrap();
        for p in s.probabilities().as_slice() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_circuit_and_single_ry() {
        let spec = CircuitSpec::chain(3, 2).unwrap();
        let s = forward(&spec, &ParameterSet::zeros(&spec), 0.0).unwrap();
        assert!((s.probabilities().as_slice()[0] - 1.0).abs() < 1e-15);

        let spec = CircuitSpec::chain(1, 1).unwrap();
        let s = forward(&spec, &ParameterSet::new(vec![0.0, PI, 0.0]), 0.0).unwrap();
        let p = s.probabilities();
        assert!(p.as_slice()[0].abs() < 1e-12 && (p.as_slice()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entangler_patterns() {
        assert!(CircuitSpec::chain(1, 1).unwrap().entangler_pairs().is_empty());
        assert_eq!(CircuitSpec::chain(2, 1).unwrap().entangler_pairs(), vec![(0, 1)]);
        let ring2 = CircuitSpec::new(2, 1, Entangler::Ring).unwrap();
        assert_eq!(ring2.entangler_pairs(), vec![(0, 1)]);
        let ring4 = CircuitSpec::new(4, 1, Entangler::Ring).unwrap();
        assert_eq!(ring4.entangler_pairs(), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let spec = CircuitSpec::chain(2, 3).unwrap();
        let err = forward(&spec, &ParameterSet::new(vec![0.0; 5]), 0.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(CircuitSpec::chain(2, 0).is_err());
    }

    #[test]
    fn spec_json_round_trip_and_strictness() {
        let spec = CircuitSpec::new(4, 3, Entangler::Ring).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"n_qubits":4,"n_layers":3,"entangler":"ring"}"#);
        let back: CircuitSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<CircuitSpec>(r#"{"n_qubits":2,"n_layers":0}"#).is_err());
        assert!(serde_json::from_str::<CircuitSpec>(r#"{"n_qubits":2,"n_layers":1,"x":1}"#).is_err());
        let d: CircuitSpec = serde_json::from_str(r#"{"n_qubits":2,"n_layers":1}"#).unwrap();
        assert_eq!(d.entangler(), Entangler::Chain);
    }

    #[test]
    fn param_index_layout() {
        let spec = CircuitSpec::chain(2, 3).unwrap();
        assert_eq!(spec.param_index(0, 0, 0), 0);
        assert_eq!(spec.param_index(0, 1, 2), 5);
        assert_eq!(spec.param_index(2, 1, 2), 17);
        assert_eq!(spec.n_params(), 18);
    }
}
