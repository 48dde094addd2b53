//! Command-line surface and the mapping from flags onto config keys.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const PRECEDENCE: &str = "\
Configuration is resolved in three layers: built-in defaults, then the JSON
document given with --config (the experiment's own config object; unknown keys
are rejected), then command-line flags. Later layers win.

Exit codes: 0 success, 2 configuration error or bad usage, 3 numeric failure.";

#[derive(Debug, Parser)]
#[command(name = "lrpq", version, about = "Log-ratio probability quantum circuit experiments", after_help = PRECEDENCE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Base seed for data, initialization and sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for the JSON and CSV reports.
    #[arg(long, global = true, env = "LRPQ_OUT", default_value = "results")]
    pub out: PathBuf,

    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON config document for the chosen experiment.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Loss surface over the top two Hessian directions.
    Landscape(LandscapeArgs),
    /// Gradient variance against circuit depth.
    VarianceScan(VarianceArgs),
    /// Multi-output ensemble regression on trigonometric targets.
    Regression(RegressionArgs),
    /// Ensemble uncertainty on a sparse, heteroscedastic sine.
    Uq(UqArgs),
    /// Finite-shot variance of LRP estimates.
    ShotNoise(ShotArgs),
    /// Built-in oracle and invariant checks.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Landscape(_) => "landscape",
            Command::VarianceScan(_) => "variance-scan",
            Command::Regression(_) => "regression",
            Command::Uq(_) => "uq",
            Command::ShotNoise(_) => "shot-noise",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum HeadArg {
    Lrp,
    Pauli,
}

impl HeadArg {
    fn json(self) -> Value {
        match self {
            HeadArg::Lrp => json!("lrp"),
            HeadArg::Pauli => json!("pauli"),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EntanglerArg {
    Chain,
    Ring,
}

impl EntanglerArg {
    fn json(self) -> Value {
        match self {
            EntanglerArg::Chain => json!("chain"),
            EntanglerArg::Ring => json!("ring"),
        }
    }
}

/// Integer list given as `start:stop:step` (stop inclusive), `a,b,c` or a
/// single value.
#[derive(Clone, Debug, PartialEq)]
pub struct IntList(pub Vec<u64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad integer {t:?}: {e}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let (start, stop, step) = match parts.as_slice() {
                [a, b] => (num(a)?, num(b)?, 1),
                [a, b, c] => (num(a)?, num(b)?, num(c)?),
                _ => return Err(format!("range {s:?} is not start:stop[:step]")),
            };
            if step == 0 || start > stop {
                return Err(format!("range {s:?} is empty or has a zero step"));
            }
            return Ok(IntList((start..=stop).step_by(step as usize).collect()));
        }
        s.split(',').map(num).collect::<Result<_, _>>().map(IntList)
    }
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long, value_enum)]
    pub head: Option<HeadArg>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_enum)]
    pub entangler: Option<EntanglerArg>,
    /// Number of trig targets.
    #[arg(long)]
    pub outputs: Option<usize>,
    /// Odd number of grid points per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Warm-up epochs for the reference point.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[arg(long, value_enum)]
    pub head: Option<HeadArg>,
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Depths, e.g. `2:16:2`.
    #[arg(long)]
    pub depths: Option<IntList>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Parameter draws per (depth, seed) cell.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long, value_enum)]
    pub entangler: Option<EntanglerArg>,
    #[arg(long)]
    pub param_index: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RegressionArgs {
    #[arg(long, value_enum)]
    pub head: Option<HeadArg>,
    #[arg(long)]
    pub outputs: Option<usize>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_enum)]
    pub entangler: Option<EntanglerArg>,
    #[arg(long)]
    pub ensemble: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct UqArgs {
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_enum)]
    pub entangler: Option<EntanglerArg>,
    #[arg(long)]
    pub ensemble: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ShotArgs {
    /// Qubit counts, e.g. `2:4`.
    #[arg(long)]
    pub qubits: Option<IntList>,
    /// Shot counts, e.g. `1000,10000,100000`.
    #[arg(long)]
    pub shots: Option<IntList>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub pseudo_count: Option<f64>,
}

/// A config key path and the value a flag assigns to it.
pub type Override = (&'static [&'static str], Value);

fn push<T: Into<Value>>(out: &mut Vec<Override>, path: &'static [&'static str], v: Option<T>) {
    if let Some(v) = v {
        out.push((path, v.into()));
    }
}

impl Command {
    /// Flag overrides for this subcommand, with `seed` routed to the key the
    /// experiment seeds from.
    pub fn overrides(&self, seed: Option<u64>) -> Vec<Override> {
        let mut o = Vec::new();
        match self {
            Command::Landscape(a) => {
                push(&mut o, &["warmup", "seed"], seed);
                push(&mut o, &["head"], a.head.map(HeadArg::json));
                push(&mut o, &["n_qubits"], a.qubits);
                push(&mut o, &["n_layers"], a.layers);
                push(&mut o, &["entangler"], a.entangler.map(EntanglerArg::json));
                push(&mut o, &["n_outputs"], a.outputs);
                push(&mut o, &["resolution"], a.resolution);
                push(&mut o, &["grid_half_width"], a.half_width);
                push(&mut o, &["warmup", "epochs"], a.epochs);
            }
            Command::VarianceScan(a) => {
                push(&mut o, &["seed"], seed);
                push(&mut o, &["head"], a.head.map(HeadArg::json));
                push(&mut o, &["n_qubits"], a.qubits);
                push(&mut o, &["depths"], a.depths.as_ref().map(|d| json!(d.0)));
                push(&mut o, &["n_seeds"], a.seeds);
                push(&mut o, &["n_ensembles"], a.draws);
                push(&mut o, &["entangler"], a.entangler.map(EntanglerArg::json));
                push(&mut o, &["param_index"], a.param_index);
            }
            Command::Regression(a) => {
                push(&mut o, &["train", "seed"], seed);
                push(&mut o, &["head"], a.head.map(HeadArg::json));
                push(&mut o, &["n_outputs"], a.outputs);
                push(&mut o, &["n_qubits"], a.qubits);
                push(&mut o, &["n_layers"], a.layers);
                push(&mut o, &["entangler"], a.entangler.map(EntanglerArg::json));
                push(&mut o, &["ensemble_size"], a.ensemble);
                push(&mut o, &["train", "epochs"], a.epochs);
                push(&mut o, &["grid_points"], a.grid_points);
            }
            Command::Uq(a) => {
                push(&mut o, &["train", "seed"], seed);
                push(&mut o, &["n_qubits"], a.qubits);
                push(&mut o, &["n_layers"], a.layers);
                push(&mut o, &["entangler"], a.entangler.map(EntanglerArg::json));
                push(&mut o, &["ensemble_size"], a.ensemble);
                push(&mut o, &["train", "epochs"], a.epochs);
                push(&mut o, &["grid_points"], a.grid_points);
            }
            Command::ShotNoise(a) => {
                push(&mut o, &["seed"], seed);
                push(&mut o, &["n_qubits"], a.qubits.as_ref().map(|q| json!(q.0)));
                push(&mut o, &["shots"], a.shots.as_ref().map(|s| json!(s.0)));
                push(&mut o, &["repeats"], a.repeats);
                push(&mut o, &["pseudo_count"], a.pseudo_count);
            }
            Command::Verify => {}
        }
        o
    }
}

/// Sets `path` inside `doc`, creating intermediate objects.
pub fn apply(doc: &mut Value, path: &[&str], value: Value) -> Result<(), String> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = doc;
    for key in parents {
        let obj = cur.as_object_mut().ok_or_else(|| format!("config key {key:?} is not inside an object"))?;
        cur = obj.entry(key.to_string()).or_insert_with(|| json!({}));
    }
    cur.as_object_mut()
        .ok_or_else(|| format!("cannot set {last:?}: parent is not an object"))?
        .insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive() {
        assert_eq!("2:16:2".parse::<IntList>().unwrap().0, vec![2, 4, 6, 8, 10, 12, 14, 16]);
        assert_eq!("2:4".parse::<IntList>().unwrap().0, vec![2, 3, 4]);
        assert_eq!("1:6:2".parse::<IntList>().unwrap().0, vec![1, 3, 5]);
        assert_eq!("1000,10000".parse::<IntList>().unwrap().0, vec![1000, 10000]);
        assert_eq!("7".parse::<IntList>().unwrap().0, vec![7]);
    }

    #[test]
    fn bad_ranges_are_rejected() {
        for s in ["", "4:2", "1:5:0", "a:b", "1:2:3:4", "1,,2"] {
            assert!(s.parse::<IntList>().is_err(), "{s}");
        }
    }

    #[test]
    fn overrides_nest_into_objects() {
        let mut doc = json!({"train": {"epochs": 5, "learning_rate": 0.2}});
        apply(&mut doc, &["train", "seed"], json!(3)).unwrap();
        apply(&mut doc, &["head"], json!("lrp")).unwrap();
        assert_eq!(doc, json!({"train": {"epochs": 5, "learning_rate": 0.2, "seed": 3}, "head": "lrp"}));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
