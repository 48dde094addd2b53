//! Exact gradients through the statevector by a reverse (adjoint) sweep, plus
//! finite-difference oracles and a finite-difference Hessian.
//!
//! Every loss here is a function of the basis probabilities `p_i = |psi_i|^2`
//! of the final state. For such a loss `L(p)` the derivative with respect to a
//! rotation angle `a` of `exp(-i a G / 2)` is `Im <lambda_k| G |psi_k>`, where
//! `psi_k` is the state right after the rotation and `lambda_k` is
//! `diag(dL/dp) psi` propagated backwards to the same point. One forward pass
//! and one backward sweep give the whole gradient.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_ops, CircuitSpec, Op, ParameterSet};
use crate::error::{Error, Result};
use crate::loss::{batch_mean, LossKind};
use crate::outputs::{check_eps, Head, OutputVector, DEFAULT_EPS};
use crate::statevector::{Gate, StateVector};

/// Largest parameter count accepted by the finite-difference Hessian.
pub const MAX_HESSIAN_DIM: usize = 200;

/// Default Hessian step in radians.
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-3;

/// Default finite-difference gradient step in radians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Eigenvalue gap below which the leading directions are reported degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// One training example: scalar input and its target row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub target: Vec<f64>,
}

impl Sample {
    pub fn new(x: f64, target: Vec<f64>) -> Self {
        Self { x, target }
    }
}

/// A circuit together with its output head and loss; everything needed to
/// evaluate and differentiate a batch loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub spec: CircuitSpec,
    pub head: Head,
    pub loss: LossKind,
    pub eps: f64,
}

impl Objective {
    pub fn new(spec: CircuitSpec, head: Head, loss: LossKind) -> Self {
        Self { spec, head, loss, eps: DEFAULT_EPS }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn n_outputs(&self) -> usize {
        self.head.output_len(self.spec.n_qubits())
    }

    /// Validates the batch against the head/loss combination.
    pub fn check_batch(&self, params: &ParameterSet, batch: &[Sample]) -> Result<()> {
        check_eps(self.eps)?;
        self.spec.check_params(params)?;
        if batch.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let n_out = self.n_outputs();
        for s in batch {
            self.loss.validate(n_out, s.target.len())?;
            if !s.x.is_finite() || s.target.iter().any(|t| !t.is_finite()) {
                return Err(Error::Input(format!("non-finite sample {s:?}")));
            }
        }
        Ok(())
    }

    /// Model outputs at input `x`.
    pub fn predict(&self, params: &ParameterSet, x: f64) -> Result<OutputVector> {
        let state = crate::circuit::forward(&self.spec, params, x)?;
        Ok(OutputVector {
            mode: self.head,
            values: self.head.evaluate(state.probabilities().as_slice(), self.eps),
        })
    }

    /// Per-sample loss values.
    pub fn sample_losses(&self, params: &ParameterSet, batch: &[Sample]) -> Result<Vec<f64>> {
        self.check_batch(params, batch)?;
        Ok(batch
            .iter()
            .map(|s| self.unchecked_sample_loss(params.as_slice(), s))
            .collect())
    }

    /// Mean loss over the batch.
    pub fn loss(&self, params: &ParameterSet, batch: &[Sample]) -> Result<f64> {
        let value = batch_mean(&self.sample_losses(params, batch)?);
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss {value}")));
        }
        Ok(value)
    }

    fn unchecked_sample_loss(&self, params: &[f64], sample: &Sample) -> f64 {
        let mut state = StateVector::zero_state(self.spec.n_qubits()).expect("validated spec");
        apply_ops(&mut state, &self.spec.ops(sample.x), params);
        let yhat = self.head.evaluate(state.probabilities().as_slice(), self.eps);
        self.loss.value(&yhat, &sample.target)
    }

    /// Exact gradient of the mean batch loss.
    pub fn gradient(&self, params: &ParameterSet, batch: &[Sample]) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(params, batch)?.1)
    }

    /// Mean batch loss and its exact gradient from one forward/backward pass
    /// per sample.
    pub fn loss_and_gradient(&self, params: &ParameterSet, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
        self.check_batch(params, batch)?;
        let mut grad = vec![0.0; params.len()];
        let mut total = 0.0;
        for sample in batch {
            let ops = self.spec.ops(sample.x);
            let mut state = StateVector::zero_state(self.spec.n_qubits())?;
            apply_ops(&mut state, &ops, params.as_slice());
            let probs = state.probabilities();
            let yhat = self.head.evaluate(probs.as_slice(), self.eps);
            total += self.loss.value(&yhat, &sample.target);
            let d_out = self.loss.output_gradient(&yhat, &sample.target);
            let d_probs = self.head.pullback(probs.as_slice(), self.eps, &d_out);
            adjoint_sweep(state, &ops, params.as_slice(), &d_probs, &mut grad);
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        let loss = total * scale;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("non-finite loss or gradient (loss = {loss})")));
        }
        Ok((loss, grad))
    }

    /// Central-difference gradient of the mean batch loss.
    pub fn finite_diff_gradient(&self, params: &ParameterSet, batch: &[Sample], step: f64) -> Result<Vec<f64>> {
        self.check_batch(params, batch)?;
        central_difference(
            |theta| batch_mean(&batch.iter().map(|s| self.unchecked_sample_loss(theta, s)).collect::<Vec<_>>()),
            params.as_slice(),
            step,
        )
    }

    /// Symmetrized Hessian of the mean batch loss from central differences of
    /// the exact gradient.
    pub fn hessian(&self, params: &ParameterSet, batch: &[Sample], step: f64) -> Result<HessianMatrix> {
        self.check_batch(params, batch)?;
        hessian_from_gradient(
            |theta| self.gradient(&ParameterSet::new(theta.to_vec()), batch),
            params.as_slice(),
            step,
        )
    }
}

/// Gradient of `sum_i weights[i] * p_i(params, x)`: the derivative of a
/// diagonal observable's expectation.
pub fn observable_gradient(spec: &CircuitSpec, params: &ParameterSet, x: f64, weights: &[f64]) -> Result<Vec<f64>> {
    spec.check_params(params)?;
    if weights.len() != 1 << spec.n_qubits() {
        return Err(Error::Input(format!(
            "observable has {} weights for a {}-qubit state",
            weights.len(),
            spec.n_qubits()
        )));
    }
    let ops = spec.ops(x);
    let mut state = StateVector::zero_state(spec.n_qubits())?;
    apply_ops(&mut state, &ops, params.as_slice());
    let mut grad = vec![0.0; params.len()];
    adjoint_sweep(state, &ops, params.as_slice(), weights, &mut grad);
    Ok(grad)
}

/// `d p_i / d theta_j` as rows indexed by basis state `i`.
pub fn probability_jacobian(spec: &CircuitSpec, params: &ParameterSet, x: f64) -> Result<Vec<Vec<f64>>> {
    let dim = 1 << spec.n_qubits();
    (0..dim)
        .map(|i| {
            let mut w = vec![0.0; dim];
            w[i] = 1.0;
            observable_gradient(spec, params, x, &w)
        })
        .collect()
}

/// Reverse sweep accumulating `d/d theta sum_i weights[i] |psi_i|^2` into
/// `grad`. `state` must be the output of `ops`.
fn adjoint_sweep(mut psi: StateVector, ops: &[Op], params: &[f64], weights: &[f64], grad: &mut [f64]) {
    let mut lambda = psi.clone();
    lambda.scale_diagonal(weights);
    // The embedding gates carry no parameters, so the sweep stops at the last
    // rotation.
    let first_param = ops.iter().position(|op| matches!(op, Op::Rot(..))).unwrap_or(ops.len());
    for op in ops[first_param..].iter().rev() {
        match *op {
            Op::Rot(axis, p, q) => {
                grad[p] += im_matrix_element(&lambda, &axis.generator(), q, &psi);
                let inverse = axis.gate(-params[p]);
                psi.apply_gate_unchecked(&inverse, q);
                lambda.apply_gate_unchecked(&inverse, q);
            }
            Op::Fixed(ref g, q) => {
                let inverse = g.adjoint();
                psi.apply_gate_unchecked(&inverse, q);
                lambda.apply_gate_unchecked(&inverse, q);
            }
            Op::Cnot(c, t) => {
                psi.apply_cnot_unchecked(c, t);
                lambda.apply_cnot_unchecked(c, t);
            }
        }
    }
}

/// `Im <bra| G_q |ket>` for a single-qubit operator `G` on `qubit`.
fn im_matrix_element(bra: &StateVector, gate: &Gate, qubit: usize, ket: &StateVector) -> f64 {
    let stride = ket.qubit_mask(qubit);
    let [[g00, g01], [g10, g11]] = gate.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (bblock, kblock) in bra
        .amplitudes()
        .chunks_exact(2 * stride)
        .zip(ket.amplitudes().chunks_exact(2 * stride))
    {
        let (b0, b1) = bblock.split_at(stride);
        let (k0, k1) = kblock.split_at(stride);
        for i in 0..stride {
            acc += b0[i].conj() * (g00 * k0[i] + g01 * k1[i]) + b1[i].conj() * (g10 * k0[i] + g11 * k1[i]);
        }
    }
    acc.im
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / 2h` for each `j`.
pub fn central_difference<F>(mut f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::Config(format!("finite-difference step {step:e} outside [1e-7, 1e-3]")));
    }
    let mut theta = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for j in 0..point.len() {
        theta[j] = point[j] + step;
        let plus = f(&theta);
        theta[j] = point[j] - step;
        let minus = f(&theta);
        theta[j] = point[j];
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}

/// Dense symmetric matrix in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianMatrix {
    pub dim: usize,
    pub values: Vec<f64>,
    /// `max |H_ij - H_ji|` before symmetrization.
    pub raw_asymmetry: f64,
}

impl HessianMatrix {
    /// Symmetrizes `values` as `(H + H^T) / 2`, recording the asymmetry.
    pub fn from_raw(dim: usize, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::Input(format!("{} entries for a {dim}x{dim} matrix", values.len())));
        }
        let mut raw_asymmetry = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (values[i * dim + j], values[j * dim + i]);
                raw_asymmetry = raw_asymmetry.max((a - b).abs());
                let mean = 0.5 * (a + b);
                values[i * dim + j] = mean;
                values[j * dim + i] = mean;
            }
        }
        Ok(Self { dim, values, raw_asymmetry })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.dim + col]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_matrix()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.values)
    }
}

/// Finite-difference Hessian from a gradient oracle:
/// row `i` is `(g(x + h e_i) - g(x - h e_i)) / 2h`, then symmetrized.
pub fn hessian_from_gradient<G>(mut gradient: G, point: &[f64], step: f64) -> Result<HessianMatrix>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let dim = point.len();
    if dim > MAX_HESSIAN_DIM {
        return Err(Error::Config(format!(
            "Hessian dimension {dim} exceeds the ceiling of {MAX_HESSIAN_DIM}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("invalid Hessian step {step}")));
    }
    let mut values = vec![0.0; dim * dim];
    let mut theta = point.to_vec();
    for i in 0..dim {
        theta[i] = point[i] + step;
        let plus = gradient(&theta)?;
        theta[i] = point[i] - step;
        let minus = gradient(&theta)?;
        theta[i] = point[i];
        if plus.len() != dim || minus.len() != dim {
            return Err(Error::Input("gradient oracle returned the wrong length".into()));
        }
        for j in 0..dim {
            values[i * dim + j] = (plus[j] - minus[j]) / (2.0 * step);
        }
    }
    HessianMatrix::from_raw(dim, values)
}

/// The two leading eigen-directions of a Hessian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianDirections {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub eigenvalues: [f64; 2],
    /// Set when the leading eigenvalue magnitudes are not separated by at
    /// least [`DEGENERACY_GAP`], so the pair is one choice among many.
    pub degenerate: bool,
}

/// Orthonormal eigenvectors of the two largest-magnitude eigenvalues, each
/// signed so that its first non-negligible component is positive.
pub fn top_hessian_directions(h: &HessianMatrix) -> Result<HessianDirections> {
    if h.dim < 2 {
        return Err(Error::Config("need at least two parameters for two directions".into()));
    }
    let eig = SymmetricEigen::new(h.to_matrix());
    let mut order: Vec<usize> = (0..h.dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()).then(a.cmp(&b)));
    let mags: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].abs()).collect();
    let mut degenerate = mags[0] - mags[1] < DEGENERACY_GAP;
    if h.dim > 2 {
        degenerate |= mags[1] - mags[2] < DEGENERACY_GAP;
    }
    let column = |k: usize| {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        if v.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    Ok(HessianDirections {
        first: column(order[0]),
        second: column(order[1]),
        eigenvalues: [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]],
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_gradient_at_exact_fit() {
        let spec = CircuitSpec::chain(2, 2).unwrap();
        let obj = Objective::new(spec, Head::Pauli, LossKind::Mse);
        let params = ParameterSet::zeros(&spec);
        let z = obj.predict(&params, 0.0).unwrap().values;
        let batch = vec![Sample::new(0.0, z)];
        let g = obj.gradient(&params, &batch).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn single_qubit_closed_form() {
        // <Z> = cos(theta) with phi = omega = 0, so d/dtheta (cos theta)^2 = -sin(2 theta).
        let spec = CircuitSpec::chain(1, 1).unwrap();
        let obj = Objective::new(spec, Head::Pauli, LossKind::Mse);
        let params = ParameterSet::new(vec![0.0, FRAC_PI_4, 0.0]);
        let g = obj.gradient(&params, &[Sample::new(0.0, vec![0.0])]).unwrap();
        assert!((g[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn central_difference_of_sine_and_constant() {
        let g = central_difference(|t| t[0].sin(), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8);
        let g = central_difference(|_| 3.0, &[0.1, 0.2, 0.3], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert!(central_difference(|t| t[0], &[0.0], 1e-2).is_err());
        assert!(central_difference(|t| t[0], &[0.0], 1e-8).is_err());
    }

    #[test]
    fn quadratic_hessian_diagonal() {
        let c = [0.5, 2.0, -1.5, 3.0];
        let h = hessian_from_gradient(
            |t| Ok(t.iter().zip(c).map(|(x, ci)| 2.0 * ci * x).collect()),
            &[0.3, -0.2, 1.0, 0.0],
            DEFAULT_HESSIAN_STEP,
        )
        .unwrap();
        for i in 0..4 {
            assert!((h.get(i, i) - 2.0 * c[i]).abs() < 1e-4);
            for j in 0..4 {
                if i != j {
                    assert!(h.get(i, j).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hessian_dimension_ceiling() {
        let err = hessian_from_gradient(|t| Ok(t.to_vec()), &vec![0.0; MAX_HESSIAN_DIM + 1], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn top_directions_of_diagonal() {
        let h = HessianMatrix::from_raw(3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let d = top_hessian_directions(&h).unwrap();
        assert!(!d.degenerate);
        assert_eq!(d.eigenvalues, [3.0, 1.0]);
        assert!((d.first[0] - 1.0).abs() < 1e-12 && d.first[1].abs() < 1e-12);
        assert!((d.second[1] - 1.0).abs() < 1e-12 && d.second[0].abs() < 1e-12);
    }

    #[test]
    fn identity_is_degenerate() {
        let mut v = vec![0.0; 16];
        for i in 0..4 {
            v[i * 4 + i] = 1.0;
        }
        let d = top_hessian_directions(&HessianMatrix::from_raw(4, v).unwrap()).unwrap();
        assert!(d.degenerate);
        let dot: f64 = d.first.iter().zip(&d.second).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn magnitude_ordering_prefers_large_negative() {
        let h = HessianMatrix::from_raw(3, vec![1.0, 0.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let d = top_hessian_directions(&h).unwrap();
        assert_eq!(d.eigenvalues, [-4.0, 2.0]);
    }

    #[test]
    fn batch_errors() {
        let spec = CircuitSpec::chain(2, 1).unwrap();
        let params = ParameterSet::zeros(&spec);
        let pauli = Objective::new(spec, Head::Pauli, LossKind::Mse);
        assert!(matches!(pauli.gradient(&params, &[]), Err(Error::Input(_))));
        let three = vec![Sample::new(0.0, vec![0.0; 3])];
        assert!(matches!(pauli.gradient(&params, &three), Err(Error::Config(_))));
        let lrp = Objective::new(spec, Head::Lrp, LossKind::Mse).with_eps(0.1);
        assert!(lrp.gradient(&params, &three).is_err());
    }
}
