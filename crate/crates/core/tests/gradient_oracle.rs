mod common;

use lrpq_core::autodiff::{observable_gradient, probability_jacobian, top_hessian_directions, DEFAULT_HESSIAN_STEP};
use lrpq_core::training::{train, TrainConfig};
use lrpq_core::verify::gradient_oracle_sweep;
use lrpq_core::{CircuitSpec, Entangler, Head, LossKind, Objective, ParameterSet, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn random_params(spec: &CircuitSpec, seed: u64) -> ParameterSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ParameterSet::new((0..spec.n_params()).map(|_| rng.random_range(0.0..TAU)).collect())
}

/// LRP + MSE loss computed entirely from the dense-matrix oracle.
fn oracle_lrp_loss(n: usize, layers: usize, params: &[f64], batch: &[Sample]) -> f64 {
    batch
        .iter()
        .map(|s| {
            let p = common::oracle_probabilities(&common::circuit_unitary(n, layers, false, params, s.x));
            let last = p[p.len() - 1].ln();
            s.target
                .iter()
                .enumerate()
                .map(|(i, t)| (p[i].ln() - last - t).powi(2))
                .sum::<f64>()
                / s.target.len() as f64
        })
        .sum::<f64>()
        / batch.len() as f64
}

fn central(f: impl Fn(&[f64]) -> f64, point: &[f64], h: f64) -> Vec<f64> {
    (0..point.len())
        .map(|j| {
            let mut a = point.to_vec();
            let mut b = point.to_vec();
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn two_qubit_three_layer_lrp_gradient_matches_dense_oracle() {
    let spec = CircuitSpec::chain(2, 3).unwrap();
    let params = random_params(&spec, 0);
    let batch = vec![Sample::new(0.5, vec![0.3, -0.2, 0.8]), Sample::new(2.0, vec![-1.0, 0.4, 0.1])];
    let objective = Objective::new(spec, Head::Lrp, LossKind::Mse);
    let exact = objective.gradient(&params, &batch).unwrap();
    let fd = central(|p| oracle_lrp_loss(2, 3, p, &batch), params.as_slice(), 1e-5);
    for (a, f) in exact.iter().zip(&fd) {
        let scale = a.abs().max(f.abs());
        assert!((a - f).abs() <= 1e-6 * scale + 1e-8, "{a} vs {f}");
    }
    assert!((objective.loss(&params, &batch).unwrap() - oracle_lrp_loss(2, 3, params.as_slice(), &batch)).abs() < 1e-10);
}

#[test]
fn hundred_random_configs_agree_with_finite_differences() {
    let r = gradient_oracle_sweep(100, 0).unwrap();
    assert!(r.passed, "{}", r.detail);
}

#[test]
fn lrp_gradient_follows_the_probability_chain_rule() {
    // dL/dtheta = sum_i dL/dp_i dp_i/dtheta with dL/dp written out by hand.
    let spec = CircuitSpec::new(3, 2, Entangler::Ring).unwrap();
    let params = random_params(&spec, 4);
    let x = 1.1;
    let target = vec![0.5, -0.5, 1.0, 0.0, 0.2, -0.3, 0.7];
    let objective = Objective::new(spec, Head::Lrp, LossKind::Mse);
    let exact = objective.gradient(&params, &[Sample::new(x, target.clone())]).unwrap();

    let p = lrpq_core::circuit::forward(&spec, &params, x).unwrap().probabilities().into_inner();
    let m = target.len() as f64;
    let last = p[7];
    let mut d_p = vec![0.0; 8];
    for i in 0..7 {
        let r = (p[i] / last).ln() - target[i];
        d_p[i] = 2.0 * r / (m * p[i]);
        d_p[7] -= 2.0 * r / (m * last);
    }
    let jac = probability_jacobian(&spec, &params, x).unwrap();
    for (j, a) in exact.iter().enumerate() {
        let chain: f64 = (0..8).map(|i| d_p[i] * jac[i][j]).sum();
        assert!((a - chain).abs() <= 1e-10 * a.abs().max(1.0), "param {j}: {a} vs {chain}");
    }
}

#[test]
fn probability_jacobian_matches_dense_oracle() {
    let spec = CircuitSpec::chain(2, 2).unwrap();
    let params = random_params(&spec, 9);
    let jac = probability_jacobian(&spec, &params, 0.7).unwrap();
    for i in 0..4 {
        let fd = central(
            |p| common::oracle_probabilities(&common::circuit_unitary(2, 2, false, p, 0.7))[i],
            params.as_slice(),
            1e-5,
        );
        for (a, f) in jac[i].iter().zip(&fd) {
            assert!((a - f).abs() < 1e-9, "p{i}: {a} vs {f}");
        }
    }
}

#[test]
fn observable_gradient_is_linear_in_weights() {
    let spec = CircuitSpec::new(3, 3, Entangler::Ring).unwrap();
    let params = random_params(&spec, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w1: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
    let w2: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (a, b) = (1.7, -0.4);
    let combined: Vec<f64> = w1.iter().zip(&w2).map(|(u, v)| a * u + b * v).collect();
    let g1 = observable_gradient(&spec, &params, 0.3, &w1).unwrap();
    let g2 = observable_gradient(&spec, &params, 0.3, &w2).unwrap();
    let g = observable_gradient(&spec, &params, 0.3, &combined).unwrap();
    for k in 0..g.len() {
        assert!((g[k] - (a * g1[k] + b * g2[k])).abs() < 1e-12);
    }
}

#[test]
fn observable_gradient_of_constant_weights_vanishes() {
    // sum_i p_i = 1 for every parameter value.
    let spec = CircuitSpec::chain(3, 2).unwrap();
    let g = observable_gradient(&spec, &random_params(&spec, 1), 0.9, &[1.0; 8]).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn hessian_is_nearly_symmetric_before_symmetrization() {
    let spec = CircuitSpec::chain(2, 3).unwrap();
    let batch = vec![Sample::new(0.4, vec![0.2, -0.1]), Sample::new(1.3, vec![0.5, 0.3])];
    let objective = Objective::new(spec, Head::Pauli, LossKind::Mse);
    for seed in 0..6 {
        let h = objective.hessian(&random_params(&spec, seed), &batch, DEFAULT_HESSIAN_STEP).unwrap();
        assert!(h.raw_asymmetry < 1e-6, "seed {seed}: {}", h.raw_asymmetry);
    }
}

#[test]
fn lrp_hessian_asymmetry_is_second_order_in_the_step() {
    // Large 1/p factors inflate the third derivatives, so only the O(h^2)
    // scaling of the asymmetry is checked here.
    let spec = CircuitSpec::chain(2, 3).unwrap();
    let batch = vec![Sample::new(0.4, vec![0.2, -0.1]), Sample::new(1.3, vec![0.5, 0.3])];
    let objective = Objective::new(spec, Head::Lrp, LossKind::Mse);
    let params = random_params(&spec, 1);
    let coarse = objective.hessian(&params, &batch, 1e-3).unwrap().raw_asymmetry;
    let fine = objective.hessian(&params, &batch, 5e-4).unwrap().raw_asymmetry;
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "{coarse:e} / {fine:e} = {ratio}");
}

#[test]
fn hessian_matches_dense_oracle_second_differences() {
    let spec = CircuitSpec::chain(2, 1).unwrap();
    let params = random_params(&spec, 8);
    let batch = vec![Sample::new(0.5, vec![0.3, -0.2, 0.8])];
    let h = Objective::new(spec, Head::Lrp, LossKind::Mse).hessian(&params, &batch, 1e-3).unwrap();
    let f = |p: &[f64]| oracle_lrp_loss(2, 1, p, &batch);
    let step = 1e-4;
    for i in 0..params.len() {
        for j in 0..params.len() {
            let at = |di: f64, dj: f64| {
                let mut p = params.as_slice().to_vec();
                p[i] += di;
                p[j] += dj;
                f(&p)
            };
            let want = (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4.0 * step * step);
            assert!((h.get(i, j) - want).abs() < 1e-4 * want.abs().max(1.0), "({i},{j}) {} vs {want}", h.get(i, j));
        }
    }
}

#[test]
fn hessian_is_positive_semidefinite_at_a_zero_loss_minimum() {
    // Targets are the model's own outputs, so `star` is a global minimum.
    let spec = CircuitSpec::chain(2, 2).unwrap();
    let star = random_params(&spec, 11);
    for head in [Head::Pauli, Head::Lrp] {
        let objective = Objective::new(spec, head, LossKind::Mse);
        let batch: Vec<Sample> = [0.1, 1.0, 2.5, 4.0]
            .iter()
            .map(|&x| Sample::new(x, objective.predict(&star, x).unwrap().values))
            .collect();
        assert!(objective.loss(&star, &batch).unwrap() < 1e-25);
        let h = objective.hessian(&star, &batch, DEFAULT_HESSIAN_STEP).unwrap();
        let eig = h.eigenvalues();
        let top = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(eig.iter().all(|&v| v > -1e-6 * top.max(1.0)), "{head}: {eig:?}");
    }
}

#[test]
fn top_directions_of_trained_circuit_are_orthonormal_eigenvectors() {
    let spec = CircuitSpec::chain(2, 4).unwrap();
    let batch: Vec<Sample> = (0..20)
        .map(|i| {
            let x = TAU * i as f64 / 20.0;
            Sample::new(x, vec![x.sin(), x.cos()])
        })
        .collect();
    let objective = Objective::new(spec, Head::Pauli, LossKind::Mse);
    let run = train(&objective, &TrainConfig { epochs: 30, ..TrainConfig::default() }, &batch).unwrap();
    let h = objective.hessian(&run.final_params, &batch, DEFAULT_HESSIAN_STEP).unwrap();
    let d = top_hessian_directions(&h).unwrap();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    assert!((dot(&d.first, &d.first) - 1.0).abs() < 1e-10);
    assert!((dot(&d.second, &d.second) - 1.0).abs() < 1e-10);
    assert!(dot(&d.first, &d.second).abs() < 1e-10);
    assert!(d.eigenvalues[0].abs() >= d.eigenvalues[1].abs());
    for (v, lambda) in [(&d.first, d.eigenvalues[0]), (&d.second, d.eigenvalues[1])] {
        for i in 0..h.dim {
            let hv: f64 = (0..h.dim).map(|j| h.get(i, j) * v[j]).sum();
            assert!((hv - lambda * v[i]).abs() < 1e-9 * lambda.abs().max(1.0));
        }
        let lead = v.iter().find(|c| c.abs() > 1e-12).unwrap();
        assert!(*lead > 0.0);
    }
}
