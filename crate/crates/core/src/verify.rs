//! Self-checks run by the `verify` command: gradient oracle agreement,
//! LRP round trips, gate unitarity and norm preservation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::autodiff::{Objective, Sample, DEFAULT_FD_STEP};
use crate::circuit::{forward, rot_gate, CircuitSpec, Entangler, ParameterSet};
use crate::error::Result;
use crate::loss::LossKind;
use crate::outputs::{lrp_inverse, lrp_outputs, Head, DEFAULT_EPS};
use crate::statevector::{Gate, ProbabilityVector};

/// Relative tolerance between exact and finite-difference gradients.
pub const GRADIENT_REL_TOL: f64 = 1e-6;
/// Absolute tolerance for near-zero gradient components.
pub const GRADIENT_ABS_TOL: f64 = 1e-8;

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A random (objective, parameters, batch) triple for oracle sweeps.
#[derive(Clone, Debug)]
pub struct RandomCase {
    pub objective: Objective,
    pub params: ParameterSet,
    pub batch: Vec<Sample>,
}

/// Draws a random configuration with `n <= 4` qubits and `L <= 5` layers.
/// The loss alternates with `index` so a sweep covers every head/loss pair.
pub fn random_case(rng: &mut ChaCha8Rng, index: usize) -> RandomCase {
    let head = if index.is_multiple_of(2) { Head::Pauli } else { Head::Lrp };
    let nll = (index / 2) % 2 == 1;
    // NLL needs two outputs: two qubits for pauli, two for lrp as well.
    let min_qubits = if nll || head == Head::Pauli { 2 } else { 1 };
    let n_qubits = rng.random_range(min_qubits..=4);
    let n_layers = rng.random_range(1..=5);
    let entangler = if rng.random_bool(0.5) { Entangler::Chain } else { Entangler::Ring };
    let spec = CircuitSpec::new(n_qubits, n_layers, entangler).expect("valid random spec");
    let n_out = head.output_len(n_qubits);
    let loss = if nll {
        let mean_index = rng.random_range(0..n_out);
        let mut logvar_index = rng.random_range(0..n_out - 1);
        if logvar_index >= mean_index {
            logvar_index += 1;
        }
        LossKind::Nll { mean_index, logvar_index }
    } else {
        LossKind::Mse
    };
    let target_len = if nll { 1 } else { rng.random_range(1..=n_out) };
    let target_scale = if head == Head::Pauli { 1.0 } else { 2.0 };
    let batch_len = rng.random_range(1..=3);
    let batch = (0..batch_len)
        .map(|_| {
            let x = rng.random_range(-3.0..3.0);
            let target = (0..target_len).map(|_| rng.random_range(-target_scale..target_scale)).collect();
            Sample::new(x, target)
        })
        .collect();
    let params = ParameterSet::new((0..spec.n_params()).map(|_| rng.random_range(0.0..TAU)).collect());
    RandomCase { objective: Objective::new(spec, head, loss), params, batch }
}

/// Worst component error between two gradients under the mixed
/// relative/absolute criterion; returns `(max_relative, max_absolute_small)`.
pub fn gradient_discrepancy(exact: &[f64], approx: &[f64]) -> (f64, f64) {
    let mut rel = 0.0f64;
    let mut abs_small = 0.0f64;
    for (a, f) in exact.iter().zip(approx) {
        let scale = a.abs().max(f.abs());
        if scale > GRADIENT_ABS_TOL {
            rel = rel.max((a - f).abs() / scale);
        } else {
            abs_small = abs_small.max((a - f).abs());
        }
    }
    (rel, abs_small)
}

/// Compares exact and finite-difference gradients on `n_cases` random
/// configurations.
pub fn gradient_oracle_sweep(n_cases: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel = 0.0f64;
    let mut worst_abs = 0.0f64;
    for index in 0..n_cases {
        let case = random_case(&mut rng, index);
        let exact = case.objective.gradient(&case.params, &case.batch)?;
        let approx = case.objective.finite_diff_gradient(&case.params, &case.batch, DEFAULT_FD_STEP)?;
        let (rel, abs) = gradient_discrepancy(&exact, &approx);
        worst_rel = worst_rel.max(rel);
        worst_abs = worst_abs.max(abs);
    }
    Ok(CheckOutcome {
        name: format!("gradient oracle ({n_cases} random configs)"),
        passed: worst_rel < GRADIENT_REL_TOL && worst_abs < GRADIENT_ABS_TOL,
        detail: format!("max rel err {worst_rel:.3e}, max abs err (small comps) {worst_abs:.3e}"),
    })
}

/// Uniform random point on the simplex with every entry above `floor`.
pub fn random_simplex(rng: &mut ChaCha8Rng, dim: usize, floor: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| -rng.random_range(f64::MIN_POSITIVE..1.0).ln()).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if p.iter().all(|v| *v > floor) {
            return p;
        }
    }
}

/// `lrp_inverse(lrp_outputs(p)) == p` on random simplex points.
pub fn lrp_round_trip_sweep(n_points: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..n_points {
        let dim = 1 << (1 + k % 4);
        let p = ProbabilityVector::new(random_simplex(&mut rng, dim, 1e-10))?;
        let back = lrp_inverse(&lrp_outputs(&p, DEFAULT_EPS)?)?;
        for (a, b) in p.as_slice().iter().zip(back.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CheckOutcome {
        name: format!("lrp round trip ({n_points} simplex points)"),
        passed: worst < 1e-12,
        detail: format!("max abs err {worst:.3e}"),
    })
}

/// Unitarity of random rotation gates and their composition law.
pub fn unitarity_sweep(n_gates: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_defect = 0.0f64;
    let mut worst_compose = 0.0f64;
    for _ in 0..n_gates {
        let (a, b, c) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        for g in [Gate::rx(a), Gate::ry(b), Gate::rz(c)] {
            worst_defect = worst_defect.max(g.unitarity_defect());
        }
        let closed = rot_gate(a, b, c)?;
        let product = Gate::rz(c).matmul(&Gate::ry(b)).matmul(&Gate::rz(a));
        worst_compose = worst_compose.max(closed.max_abs_diff(&product));
        worst_defect = worst_defect.max(closed.unitarity_defect());
    }
    Ok(CheckOutcome {
        name: format!("gate unitarity ({n_gates} random angles)"),
        passed: worst_defect < 1e-12 && worst_compose < 1e-12,
        detail: format!("max defect {worst_defect:.3e}, max composition err {worst_compose:.3e}"),
    })
}

/// Norm of random deep circuits stays at one.
pub fn norm_sweep(n_circuits: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_circuits {
        let spec = CircuitSpec::new(rng.random_range(1..=6), rng.random_range(1..=12), Entangler::Ring)?;
        let params = ParameterSet::new((0..spec.n_params()).map(|_| rng.random_range(0.0..TAU)).collect());
        let state = forward(&spec, &params, rng.random_range(-3.0..3.0))?;
        worst = worst.max((state.norm_sqr() - 1.0).abs());
    }
    Ok(CheckOutcome {
        name: format!("norm preservation ({n_circuits} random circuits)"),
        passed: worst < 1e-12,
        detail: format!("max |norm^2 - 1| {worst:.3e}"),
    })
}

/// Every check of the `verify` command, in display order.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        unitarity_sweep(1000, seed)?,
        norm_sweep(200, seed.wrapping_add(1))?,
        lrp_round_trip_sweep(1000, seed.wrapping_add(2))?,
        gradient_oracle_sweep(100, seed.wrapping_add(3))?,
    ])
}
