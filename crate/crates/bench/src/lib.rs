//! Shared fixtures for the criterion benches.

use lrpq_core::{CircuitSpec, Head, LossKind, Objective, ParameterSet, Sample};

/// Deterministic, non-trivial angles for `spec`.
pub fn fixed_params(spec: &CircuitSpec) -> ParameterSet {
    ParameterSet::new((0..spec.n_params()).map(|k| 0.37 * k as f64 + 0.11).collect())
}

/// A small LRP regression objective and batch on `n_qubits` x `n_layers`.
pub fn lrp_problem(n_qubits: usize, n_layers: usize, batch: usize) -> (Objective, ParameterSet, Vec<Sample>) {
    let spec = CircuitSpec::chain(n_qubits, n_layers).expect("valid spec");
    let outputs = Head::Lrp.output_len(n_qubits);
    let samples = (0..batch)
        .map(|k| {
            let x = 6.0 * k as f64 / batch as f64;
            Sample::new(x, (0..outputs).map(|j| (x + j as f64).sin()).collect())
        })
        .collect();
    (Objective::new(spec, Head::Lrp, LossKind::Mse), fixed_params(&spec), samples)
}
