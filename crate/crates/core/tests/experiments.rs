use lrpq_core::experiments::regression::{LossRow, PredictionRow};
use lrpq_core::experiments::report::{read_csv_file, read_json_file};
use lrpq_core::experiments::shots::{balanced_probabilities, shot_noise_cell};
use lrpq_core::experiments::variance::{variance_cell, VarianceCell};
use lrpq_core::experiments::*;
use lrpq_core::training::TrainConfig;
use lrpq_core::{Head, ProbabilityVector};

fn small_landscape(head: Head) -> LandscapeConfig {
    LandscapeConfig { head, resolution: 11, warmup: TrainConfig { epochs: 3, ..TrainConfig::default() }, ..LandscapeConfig::default() }
}

#[test]
fn landscape_centre_is_the_reference_loss() {
    let r = loss_landscape(&small_landscape(Head::Pauli), None).unwrap();
    assert_eq!(r.grid[r.grid.len() / 2], 0.0);
    assert!((r.center() - r.reference_loss).abs() < 1e-12);
    assert_eq!(r.surface.len(), 11);
    assert!(r.surface.iter().all(|row| row.len() == 11));
}

#[test]
fn pauli_landscape_is_bounded_and_lrp_is_not() {
    let pauli = loss_landscape(&small_landscape(Head::Pauli), None).unwrap();
    // |<Z>| <= 1 and |y| <= 1 for sin/cos targets, so each squared error <= 4.
    assert!(pauli.max() <= 4.0 + 1e-12);
    let lrp = loss_landscape(&small_landscape(Head::Lrp), Some(&pauli.reference)).unwrap();
    assert!(lrp.max() > pauli.max(), "{} vs {}", lrp.max(), pauli.max());
}

#[test]
fn uniform_counts_concentrate() {
    let n = 1_000_000u64;
    let counts = sample_shots(&ProbabilityVector::new(vec![0.25; 4]).unwrap(), n, 3).unwrap();
    let bound = 3.0 * (n as f64 * 0.25 * 0.75).sqrt();
    for c in &counts {
        assert!((*c as f64 - n as f64 / 4.0).abs() < bound, "{counts:?}");
    }
}

#[test]
fn counts_sum_to_shots() {
    let p = balanced_probabilities(3).unwrap();
    for (seed, n) in [(0, 1), (1, 7), (2, 1000), (3, 12345)] {
        assert_eq!(sample_shots(&p, n, seed).unwrap().iter().sum::<u64>(), n);
    }
    let skewed = ProbabilityVector::new(vec![0.7, 0.0, 0.2, 0.1]).unwrap();
    let c = sample_shots(&skewed, 500, 9).unwrap();
    assert_eq!(c[1], 0);
    assert_eq!(c.iter().sum::<u64>(), 500);
}

fn shot_cfg() -> ShotNoiseConfig {
    ShotNoiseConfig { repeats: 1000, ..ShotNoiseConfig::default() }
}

#[test]
fn shot_variance_matches_propagation_at_large_n() {
    let rows = shot_noise_cell(&shot_cfg(), 2, 100_000).unwrap();
    let ratio = rows[0].ratio;
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
}

#[test]
fn doubling_shots_halves_the_variance() {
    let a = shot_noise_cell(&shot_cfg(), 2, 20_000).unwrap()[0].empirical_variance;
    let b = shot_noise_cell(&shot_cfg(), 2, 40_000).unwrap()[0].empirical_variance;
    let r = a / b;
    assert!((2.0 / 1.3..=2.0 * 1.3).contains(&r), "{r}");
}

#[test]
fn one_more_qubit_doubles_the_variance() {
    let a = shot_noise_cell(&shot_cfg(), 2, 100_000).unwrap()[0].empirical_variance;
    let b = shot_noise_cell(&shot_cfg(), 3, 100_000).unwrap()[0].empirical_variance;
    let r = b / a;
    assert!((2.0 / 1.5..=2.0 * 1.5).contains(&r), "{r}");
}

fn small_scan(head: Head) -> VarianceScanConfig {
    VarianceScanConfig { n_qubits: 3, depths: vec![1, 3, 5], n_seeds: 2, n_ensembles: 20, head, ..VarianceScanConfig::default() }
}

#[test]
fn variance_cells_reproduce_from_seed_and_depth() {
    let cfg = small_scan(Head::Pauli);
    let report = variance_scan(&cfg).unwrap();
    assert_eq!(report.cells.len(), 6);
    for c in &report.cells {
        assert_eq!(&variance_cell(&cfg, c.depth, c.seed).unwrap(), c);
        assert!(c.variance >= 0.0);
    }
    let order: Vec<(u64, usize)> = report.cells.iter().map(|c| (c.seed, c.depth)).collect();
    assert_eq!(order, vec![(0, 1), (0, 3), (0, 5), (1, 1), (1, 3), (1, 5)]);
    assert_eq!(report.trends.len(), 2);
}

#[test]
fn scan_rejects_bad_depths_and_indices() {
    let cfg = VarianceScanConfig { depths: vec![4, 2], ..small_scan(Head::Pauli) };
    assert!(variance_scan(&cfg).unwrap_err().is_config());
    let cfg = VarianceScanConfig { param_index: 10_000, ..small_scan(Head::Lrp) };
    assert!(matches!(variance_scan(&cfg), Err(lrpq_core::Error::Index(_))));
}

#[test]
fn variance_report_round_trips_through_files() {
    let report = variance_scan(&small_scan(Head::Lrp)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_report(&report, dir.path(), "20260101T000000Z").unwrap();
    assert_eq!(paths[0].file_name().unwrap(), "variance-scan_20260101T000000Z_0.json");
    let back: VarianceScanReport = read_json_file(&paths[0]).unwrap();
    assert_eq!(back, report);
    let rows: Vec<VarianceCell> = read_csv_file(&paths[1]).unwrap();
    assert_eq!(rows, report.cells);
}

#[test]
fn regression_report_round_trips_through_files() {
    let cfg = RegressionConfig {
        ensemble_size: 2,
        grid_points: 20,
        train: TrainConfig { epochs: 2, ..TrainConfig::default() },
        ..RegressionConfig::default()
    };
    let report = regression_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_report(&report, dir.path(), "t").unwrap();
    let names: Vec<String> = paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["regression_t_0.json", "regression-losses_t_0.csv", "regression-predictions_t_0.csv"]);
    let back: RegressionReport = read_json_file(&paths[0]).unwrap();
    assert_eq!(back, report);
    let losses: Vec<LossRow> = read_csv_file(&paths[1]).unwrap();
    assert_eq!(losses, report.losses);
    let preds: Vec<PredictionRow> = read_csv_file(&paths[2]).unwrap();
    assert_eq!(preds, report.predictions);
    assert_eq!(back.provenance.input_hash, report.provenance.input_hash);
}

#[test]
fn uq_and_shot_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let uq = uq_experiment(&UqConfig {
        ensemble_size: 2,
        grid_points: 30,
        train: TrainConfig { epochs: 2, ..TrainConfig::default() },
        ..UqConfig::default()
    })
    .unwrap();
    let p = write_report(&uq, dir.path(), "t").unwrap();
    assert_eq!(read_json_file::<UncertaintyReport>(&p[0]).unwrap(), uq);

    let shots = shot_noise_scan(&ShotNoiseConfig { repeats: 20, ..ShotNoiseConfig::default() }).unwrap();
    let p = write_report(&shots, dir.path(), "t").unwrap();
    assert_eq!(read_json_file::<ShotNoiseReport>(&p[0]).unwrap(), shots);

    let land = loss_landscape(&small_landscape(Head::Lrp), None).unwrap();
    let p = write_report(&land, dir.path(), "t").unwrap();
    assert_eq!(read_json_file::<LandscapeReport>(&p[0]).unwrap(), land);
}
