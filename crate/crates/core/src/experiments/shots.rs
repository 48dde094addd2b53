//! Finite-shot estimation of LRP outputs and its variance scaling.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{csv_bytes, CsvTable, Provenance, Report};
use super::variance::mean_and_variance;
use crate::error::{Error, Result};
use crate::outputs::DEFAULT_EPS;
use crate::statevector::{Gate, ProbabilityVector, StateVector};

/// Pseudo-count substituted for an empty bin so log-ratios stay finite.
pub const DEFAULT_PSEUDO_COUNT: f64 = 0.5;

/// One multinomial draw of `n_shots` measurements, built from a chain of
/// conditional binomials.
pub fn sample_shots_with<R: Rng + ?Sized>(probs: &ProbabilityVector, n_shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if n_shots == 0 {
        return Err(Error::Config("need at least one shot".into()));
    }
    let p = probs.as_slice();
    // Suffix sums keep the conditional probabilities exact for the tail.
    let mut rest = vec![0.0; p.len() + 1];
    for i in (0..p.len()).rev() {
        rest[i] = rest[i + 1] + p[i];
    }
    let mut counts = vec![0u64; p.len()];
    let mut remaining = n_shots;
    for i in 0..p.len() - 1 {
        if remaining == 0 {
            break;
        }
        let q = if rest[i] > 0.0 { (p[i] / rest[i]).min(1.0) } else { 0.0 };
        let c = Binomial::new(remaining, q)
            .map_err(|e| Error::Numeric(format!("binomial({remaining}, {q}): {e}")))?
            .sample(rng);
        counts[i] = c;
        remaining -= c;
    }
    counts[p.len() - 1] += remaining;
    Ok(counts)
}

pub fn sample_shots(probs: &ProbabilityVector, n_shots: u64, seed: u64) -> Result<Vec<u64>> {
    sample_shots_with(probs, n_shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// LRP outputs estimated from counts, with empty bins replaced by
/// `pseudo_count`.
pub fn lrp_from_counts(counts: &[u64], pseudo_count: f64) -> Vec<f64> {
    let safe = |c: u64| if c == 0 { pseudo_count } else { c as f64 };
    let last = safe(counts[counts.len() - 1]).ln();
    counts[..counts.len() - 1].iter().map(|&c| safe(c).ln() - last).collect()
}

/// Basis probabilities after `Ry(pi/2)` on every qubit of `|0...0>`.
pub fn balanced_probabilities(n_qubits: usize) -> Result<ProbabilityVector> {
    let mut s = StateVector::zero_state(n_qubits)?;
    let g = Gate::ry(FRAC_PI_2);
    for q in 0..n_qubits {
        s.apply_single_qubit(&g, q)?;
    }
    Ok(s.probabilities())
}

fn default_qubits() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_shots() -> Vec<u64> {
    vec![1_000, 10_000, 100_000]
}
fn default_repeats() -> usize {
    1000
}
fn default_pseudo() -> f64 {
    DEFAULT_PSEUDO_COUNT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotNoiseConfig {
    #[serde(default = "default_qubits")]
    pub n_qubits: Vec<usize>,
    /// Strictly ascending shot counts.
    #[serde(default = "default_shots")]
    pub shots: Vec<u64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_pseudo")]
    pub pseudo_count: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ShotNoiseConfig {
    fn default() -> Self {
        Self {
            n_qubits: default_qubits(),
            shots: default_shots(),
            repeats: default_repeats(),
            pseudo_count: default_pseudo(),
            seed: 0,
        }
    }
}

impl ShotNoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits.is_empty() || self.n_qubits.contains(&0) {
            return Err(Error::Config(format!("qubit counts must be non-empty and positive, got {:?}", self.n_qubits)));
        }
        if self.shots.is_empty() || self.shots[0] == 0 || self.shots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("shot counts must be positive and strictly ascending, got {:?}", self.shots)));
        }
        if self.repeats < 2 {
            return Err(Error::Config(format!("need at least 2 repeats, got {}", self.repeats)));
        }
        if !(self.pseudo_count > 0.0) {
            return Err(Error::Config(format!("pseudo-count must be positive, got {}", self.pseudo_count)));
        }
        Ok(())
    }
}

/// Estimator statistics of one output at one (qubits, shots) point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRow {
    pub n_qubits: usize,
    pub shots: u64,
    pub output: usize,
    pub repeats: usize,
    pub mean_estimate: f64,
    /// Population variance over the repeats.
    pub empirical_variance: f64,
    /// `2 * 2^n / N`.
    pub predicted_variance: f64,
    pub ratio: f64,
    /// Fewer shots than basis states.
    pub under_sampled: bool,
    /// Repeats in which this output or the reference bin was empty.
    pub zero_count_repeats: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseReport {
    pub provenance: Provenance,
    /// Ordered by qubit count, then shots, then output.
    pub rows: Vec<ShotRow>,
}

impl ShotNoiseReport {
    pub fn row(&self, n_qubits: usize, shots: u64, output: usize) -> Option<&ShotRow> {
        self.rows.iter().find(|r| r.n_qubits == n_qubits && r.shots == shots && r.output == output)
    }

    /// Whether the variance of every (qubits, output) series strictly drops
    /// with each increase in shots.
    pub fn monotone_in_shots(&self) -> bool {
        let mut series: BTreeMap<(usize, usize), Vec<(u64, f64)>> = BTreeMap::new();
        for r in &self.rows {
            series.entry((r.n_qubits, r.output)).or_default().push((r.shots, r.empirical_variance));
        }
        series.values_mut().all(|s| {
            s.sort_by_key(|(n, _)| *n);
            s.windows(2).all(|w| w[1].1 < w[0].1)
        })
    }
}

impl Report for ShotNoiseReport {
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn csv_tables(&self) -> Result<Vec<CsvTable>> {
        Ok(vec![CsvTable { name: String::new(), body: csv_bytes(&self.rows)? }])
    }
}

/// Repeated estimation for one (qubits, shots) point. The random stream
/// depends only on the seed and the point.
pub fn shot_noise_cell(cfg: &ShotNoiseConfig, n_qubits: usize, shots: u64) -> Result<Vec<ShotRow>> {
    let probs = balanced_probabilities(n_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((n_qubits as u64) << 48) ^ shots);
    let n_out = probs.len() - 1;
    let mut estimates = vec![Vec::with_capacity(cfg.repeats); n_out];
    let mut zero = vec![0usize; n_out];
    for _ in 0..cfg.repeats {
        let counts = sample_shots_with(&probs, shots, &mut rng)?;
        let last_empty = counts[n_out] == 0;
        for (i, y) in lrp_from_counts(&counts, cfg.pseudo_count).into_iter().enumerate() {
            estimates[i].push(y);
            if last_empty || counts[i] == 0 {
                zero[i] += 1;
            }
        }
    }
    let predicted = 2.0 * probs.len() as f64 / shots as f64;
    Ok(estimates
        .iter()
        .enumerate()
        .map(|(output, e)| {
            let (mean_estimate, empirical_variance) = mean_and_variance(e);
            ShotRow {
                n_qubits,
                shots,
                output,
                repeats: cfg.repeats,
                mean_estimate,
                empirical_variance,
                predicted_variance: predicted,
                ratio: empirical_variance / predicted,
                under_sampled: shots < probs.len() as u64,
                zero_count_repeats: zero[output],
            }
        })
        .collect())
}

pub fn shot_noise_scan(cfg: &ShotNoiseConfig) -> Result<ShotNoiseReport> {
    cfg.validate()?;
    let points: Vec<(usize, u64)> = cfg.n_qubits.iter().flat_map(|&n| cfg.shots.iter().map(move |&s| (n, s))).collect();
    for &(n, s) in &points {
        if s < 1u64 << n {
            log::warn!("{s} shots on {n} qubits is fewer than the {} basis states", 1u64 << n);
        }
    }
    let rows = points
        .par_iter()
        .map(|&(n, s)| shot_noise_cell(cfg, n, s))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let metadata = BTreeMap::from([
        ("state".to_owned(), serde_json::json!("ry(pi/2) on every qubit")),
        ("pseudo_count".to_owned(), serde_json::json!(cfg.pseudo_count)),
        ("prediction".to_owned(), serde_json::json!("2 * 2^n / N")),
        ("variance_estimator".to_owned(), serde_json::json!("population")),
    ]);
    Ok(ShotNoiseReport { provenance: Provenance::new("shot-noise", cfg.seed, DEFAULT_EPS, cfg, metadata)?, rows })
}
