//! Dataset generators and the experiment harnesses: loss landscapes,
//! gradient-variance scans, multi-output regression, ensemble uncertainty
//! and shot noise. Every harness returns a [`report::Report`] that can be
//! written as JSON plus flat CSV.

pub mod datasets;
pub mod landscape;
pub mod regression;
pub mod report;
pub mod shots;
pub mod uq;
pub mod variance;

pub use datasets::{make_sparse_noisy_sine, make_trig_dataset, Dataset, Interval, SparseSineConfig, TrigConfig};
pub use landscape::{loss_landscape, LandscapeConfig, LandscapeReport};
pub use regression::{compare_heads, regression_experiment, HeadComparison, RegressionConfig, RegressionReport};
pub use report::{write_report, Provenance, Report};
pub use shots::{sample_shots, shot_noise_scan, ShotNoiseConfig, ShotNoiseReport};
pub use uq::{uq_experiment, UncertaintyReport, UqConfig};
pub use variance::{variance_scan, VarianceScanConfig, VarianceScanReport};
