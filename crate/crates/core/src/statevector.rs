//! Dense complex statevector with in-place gate application.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index,
//! so for `n` qubits the index `i = b_0 b_1 ... b_{n-1}` in binary and qubit
//! `q` lives at bit position `n - 1 - q`. The highest index `2^n - 1` is
//! `|1...1>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the register width accepted by [`StateVector::zero_state`].
pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Tolerance used when rejecting a gate as non-unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2x2 complex matrix acting on a single qubit, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate(pub [[Complex64; 2]; 2]);

impl Gate {
    pub const IDENTITY: Gate = Gate([[ONE, ZERO], [ZERO, ONE]]);
    pub const PAULI_X: Gate = Gate([[ZERO, ONE], [ONE, ZERO]]);
    pub const PAULI_Y: Gate = Gate([[ZERO, Complex64::new(0.0, -1.0)], [I, ZERO]]);
    pub const PAULI_Z: Gate = Gate([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]]);

    /// `exp(-i a X / 2)`
    pub fn rx(angle: f64) -> Gate {
        let (s, c) = (angle / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let mis = Complex64::new(0.0, -s);
        Gate([[c, mis], [mis, c]])
    }

    /// `exp(-i a Y / 2)`
    pub fn ry(angle: f64) -> Gate {
        let (s, c) = (angle / 2.0).sin_cos();
        Gate([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    }

    /// `exp(-i a Z / 2)`
    pub fn rz(angle: f64) -> Gate {
        let half = angle / 2.0;
        Gate([
            [Complex64::from_polar(1.0, -half), ZERO],
            [ZERO, Complex64::from_polar(1.0, half)],
        ])
    }

    /// Matrix product `self * rhs` (rhs acts first).
    pub fn matmul(&self, rhs: &Gate) -> Gate {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Gate(out)
    }

    pub fn adjoint(&self) -> Gate {
        let m = &self.0;
        Gate([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Largest element-wise modulus of `U^dagger U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().matmul(self);
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((p.0[r][c] - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Gate) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

/// The CNOT matrix on two qubits in `|control target>` ordering.
pub fn cnot_matrix() -> [[Complex64; 4]; 4] {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    m
}

/// Basis-state probabilities `|<i|psi>|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Validates non-negativity, power-of-two length and normalization
    /// (within `1e-9`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 || !probs.len().is_power_of_two() {
            return Err(Error::Input(format!(
                "probability vector length {} is not a power of two >= 2",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Input(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(probs))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Exact pure state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits, `1 <= n_qubits <= DEFAULT_MAX_QUBITS`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Self::zero_state_bounded(n_qubits, DEFAULT_MAX_QUBITS)
    }

    pub fn zero_state_bounded(n_qubits: usize, max_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > max_qubits {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={max_qubits}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(Self { n_qubits, amplitudes })
    }

    /// Wraps explicit amplitudes; the vector must be normalized within `1e-9`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!("amplitude count {len} is not a power of two >= 2")));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric(format!("state is not normalized (norm^2 = {norm})")));
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Bit mask selecting `qubit` in a basis index.
    #[inline]
    pub fn qubit_mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Applies `gate` to `qubit`, rejecting non-unitary matrices.
    pub fn apply_single_qubit(&mut self, gate: &Gate, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let defect = gate.unitarity_defect();
        if !(defect <= UNITARITY_TOLERANCE) {
            return Err(Error::Numeric(format!("gate is not unitary (defect {defect:e})")));
        }
        self.apply_gate_unchecked(gate, qubit);
        Ok(())
    }

    /// Applies `gate` over the strided amplitude pairs of `qubit` without
    /// validating the matrix.
    pub(crate) fn apply_gate_unchecked(&mut self, gate: &Gate, qubit: usize) {
        debug_assert!(qubit < self.n_qubits);
        let stride = self.qubit_mask(qubit);
        let [[g00, g01], [g10, g11]] = gate.0;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = g00 * x0 + g01 * x1;
                *a1 = g10 * x0 + g11 * x1;
            }
        }
    }

    /// Multiplies amplitude `i` by the real weight `weights[i]`; the result
    /// is generally not normalized.
    pub(crate) fn scale_diagonal(&mut self, weights: &[f64]) {
        for (a, w) in self.amplitudes.iter_mut().zip(weights) {
            *a *= *w;
        }
    }

    /// Flips `target` on every basis state whose `control` bit is 1.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!("CNOT control and target are both {control}")));
        }
        self.apply_cnot_unchecked(control, target);
        Ok(())
    }

    pub(crate) fn apply_cnot_unchecked(&mut self, control: usize, target: usize) {
        let cmask = self.qubit_mask(control);
        let tmask = self.qubit_mask(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    pub fn probabilities(&self) -> ProbabilityVector {
        ProbabilityVector::from_raw(self.amplitudes.iter().map(|a| a.norm_sqr()).collect())
    }

    /// `<psi| Z_qubit |psi>`
    pub fn pauli_z_expectation(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.qubit_mask(qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }
}
