//! Multi-output trig regression with deep ensembles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::datasets::{even_grid, make_trig_dataset, trig_targets, Dataset, TrigConfig};
use super::report::{csv_bytes, CsvTable, Provenance, Report};
use super::variance::mean_and_variance;
use crate::autodiff::Objective;
use crate::circuit::{CircuitSpec, Entangler, ParameterSet};
use crate::error::{Error, Result};
use crate::loss::{mse, LossKind};
use crate::outputs::Head;
use crate::training::{train_ensemble, TrainConfig, TrainResult};

fn default_outputs() -> usize {
    3
}
fn default_head() -> Head {
    Head::Lrp
}
fn default_qubits() -> usize {
    2
}
fn default_layers() -> usize {
    3
}
fn default_ensemble() -> usize {
    10
}
fn default_grid() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionConfig {
    #[serde(default = "default_outputs")]
    pub n_outputs: usize,
    #[serde(default = "default_head")]
    pub head: Head,
    #[serde(default = "default_qubits")]
    pub n_qubits: usize,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default)]
    pub entangler: Entangler,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    /// Member `k` trains with seed `train.seed + k`; the dataset uses
    /// `train.seed`.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub data: TrigConfig,
    /// Dense prediction grid over the data range.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            n_outputs: default_outputs(),
            head: default_head(),
            n_qubits: default_qubits(),
            n_layers: default_layers(),
            entangler: Entangler::default(),
            ensemble_size: default_ensemble(),
            train: TrainConfig::default(),
            data: TrigConfig::default(),
            grid_points: default_grid(),
        }
    }
}

fn ordinal(k: usize) -> String {
    match k {
        1 => "first".into(),
        2 => "second".into(),
        3 => "third".into(),
        k => format!("{k}th"),
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        let available = self.head.output_len(self.n_qubits);
        if self.n_outputs > available {
            return Err(Error::Config(format!(
                "{} head on {} qubits has {available} outputs and is unable to regress the {} feature",
                self.head,
                self.n_qubits,
                ordinal(available + 1)
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::Config(format!("need at least 2 grid points, got {}", self.grid_points)));
        }
        self.train.validate()
    }

    pub fn objective(&self) -> Result<Objective> {
        let spec = CircuitSpec::new(self.n_qubits, self.n_layers, self.entangler)?;
        Ok(Objective::new(spec, self.head, LossKind::Mse))
    }
}

/// Loss curve entry of one member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub epoch: usize,
    pub member: usize,
    pub loss: f64,
}

/// Ensemble mean and spread of one output at one grid input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub x: f64,
    pub output: usize,
    pub mean: f64,
    /// Population standard deviation over the members.
    pub std: f64,
    pub clean_target: f64,
}

/// Training summary of one member; timings live only in the JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub seed: u64,
    pub initial_params: ParameterSet,
    pub final_params: ParameterSet,
    pub loss_history: Vec<f64>,
    /// `None` when the final evaluation was not finite.
    pub final_loss: Option<f64>,
    pub wall_time_s: f64,
    pub failure: Option<String>,
}

impl MemberSummary {
    pub fn from_result(seed: u64, r: &TrainResult) -> Self {
        Self {
            seed,
            initial_params: r.initial_params.clone(),
            final_params: r.final_params.clone(),
            loss_history: r.loss_history.clone(),
            final_loss: r.final_loss.is_finite().then_some(r.final_loss),
            wall_time_s: r.wall_time_s,
            failure: r.failure.clone(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub provenance: Provenance,
    pub head: Head,
    pub n_outputs: usize,
    pub dataset: Dataset,
    pub members: Vec<MemberSummary>,
    /// Mean of the successful members' final training MSE.
    pub ensemble_mean_final_loss: f64,
    /// Training MSE of the ensemble-mean prediction.
    pub mean_prediction_loss: f64,
    pub losses: Vec<LossRow>,
    pub predictions: Vec<PredictionRow>,
}

impl RegressionReport {
    pub fn final_losses(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.final_loss.unwrap_or(f64::NAN)).collect()
    }
}

impl Report for RegressionReport {
    fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn csv_tables(&self) -> Result<Vec<CsvTable>> {
        Ok(vec![
            CsvTable { name: "losses".into(), body: csv_bytes(&self.losses)? },
            CsvTable { name: "predictions".into(), body: csv_bytes(&self.predictions)? },
        ])
    }
}

/// Per-member predictions of the first `n_outputs` outputs at each input.
fn member_predictions(objective: &Objective, params: &[&ParameterSet], xs: &[f64], n_outputs: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    params
        .iter()
        .map(|p| {
            xs.iter()
                .map(|&x| objective.predict(p, x).map(|y| y.values[..n_outputs].to_vec()))
                .collect()
        })
        .collect()
}

/// `preds[member][point][output]` across members.
fn member_values(preds: &[Vec<Vec<f64>>], point: usize, output: usize) -> Vec<f64> {
    preds.iter().map(|m| m[point][output]).collect()
}

pub fn regression_experiment(cfg: &RegressionConfig) -> Result<RegressionReport> {
    cfg.validate()?;
    let objective = cfg.objective()?;
    let dataset = make_trig_dataset(&cfg.data, cfg.n_outputs, cfg.train.seed)?;
    let samples = dataset.samples();
    let ensemble = train_ensemble(&objective, &cfg.train, &samples, cfg.ensemble_size)?;
    let members: Vec<MemberSummary> = ensemble
        .seeds
        .iter()
        .zip(&ensemble.members)
        .map(|(&s, r)| MemberSummary::from_result(s, r))
        .collect();

    let losses = members
        .iter()
        .enumerate()
        .flat_map(|(k, m)| {
            m.loss_history.iter().enumerate().map(move |(e, &loss)| LossRow { epoch: e + 1, member: k, loss })
        })
        .collect();

    let ok: Vec<&ParameterSet> = ensemble.successful().map(|m| &m.final_params).collect();
    let final_ok: Vec<f64> = members.iter().filter(|m| m.succeeded()).filter_map(|m| m.final_loss).collect();
    let ensemble_mean_final_loss = final_ok.iter().sum::<f64>() / final_ok.len() as f64;

    let train_preds = member_predictions(&objective, &ok, &dataset.inputs, cfg.n_outputs)?;
    let mean_prediction_loss = dataset
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let yhat: Vec<f64> = (0..cfg.n_outputs).map(|o| mean_and_variance(&member_values(&train_preds, i, o)).0).collect();
            mse(&yhat, t)
        })
        .sum::<Result<f64>>()?
        / dataset.len() as f64;

    let grid = even_grid(cfg.grid_points, cfg.data.x_range);
    let grid_preds = member_predictions(&objective, &ok, &grid, cfg.n_outputs)?;
    let mut predictions = Vec::with_capacity(grid.len() * cfg.n_outputs);
    for (i, &x) in grid.iter().enumerate() {
        let clean = trig_targets(x, cfg.n_outputs);
        for (o, &clean_target) in clean.iter().enumerate() {
            let (mean, var) = mean_and_variance(&member_values(&grid_preds, i, o));
            predictions.push(PredictionRow { x, output: o, mean, std: var.sqrt(), clean_target });
        }
    }

    let metadata = BTreeMap::from([
        ("loss".to_owned(), serde_json::json!("mse")),
        ("member_seeds".to_owned(), serde_json::json!(ensemble.seeds)),
        ("data_seed".to_owned(), serde_json::json!(dataset.seed)),
        ("noise_floor".to_owned(), serde_json::json!(cfg.data.noise_sigma.powi(2))),
    ]);
    Ok(RegressionReport {
        provenance: Provenance::new("regression", cfg.train.seed, objective.eps, cfg, metadata)?,
        head: cfg.head,
        n_outputs: cfg.n_outputs,
        dataset,
        members,
        ensemble_mean_final_loss,
        mean_prediction_loss,
        losses,
        predictions,
    })
}

/// Final losses of the lrp and pauli heads trained on the same 2-output
/// data with the same member seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadComparison {
    pub seeds: Vec<u64>,
    pub lrp_final: Vec<f64>,
    pub pauli_final: Vec<f64>,
    /// Seeds where the lrp loss is strictly lower.
    pub lrp_wins: usize,
}

impl HeadComparison {
    /// Pairs members by position; both reports must share member seeds.
    pub fn from_reports(lrp: &RegressionReport, pauli: &RegressionReport) -> Result<Self> {
        let seeds: Vec<u64> = lrp.members.iter().map(|m| m.seed).collect();
        if seeds != pauli.members.iter().map(|m| m.seed).collect::<Vec<_>>() {
            return Err(Error::Config("compared ensembles were trained with different seeds".into()));
        }
        let lrp_final = lrp.final_losses();
        let pauli_final = pauli.final_losses();
        let lrp_wins = lrp_final.iter().zip(&pauli_final).filter(|(l, p)| l < p).count();
        Ok(Self { seeds, lrp_final, pauli_final, lrp_wins })
    }
}

pub fn compare_heads(cfg: &RegressionConfig) -> Result<HeadComparison> {
    let lrp = regression_experiment(&RegressionConfig { head: Head::Lrp, n_outputs: 2, ..cfg.clone() })?;
    let pauli = regression_experiment(&RegressionConfig { head: Head::Pauli, n_outputs: 2, ..cfg.clone() })?;
    HeadComparison::from_reports(&lrp, &pauli)
}
