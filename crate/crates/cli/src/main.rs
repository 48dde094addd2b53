mod args;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use lrpq_core::experiments::*;
use lrpq_core::verify::run_all;
use serde::de::DeserializeOwned;
use serde_json::Value;

use args::{apply, Cli, Command};

/// A failed run and the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Config(String),
    Numeric(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Other(m) => f.write_str(m),
        }
    }
}

impl From<lrpq_core::Error> for Failure {
    fn from(e: lrpq_core::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else if matches!(e, lrpq_core::Error::Numeric(_)) {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

/// Defaults, then the config file, then flags.
fn resolve<C: DeserializeOwned>(cli: &Cli) -> Result<C, Failure> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
            if !v.is_object() {
                return Err(Failure::Config(format!("config {} must be a JSON object", path.display())));
            }
            v
        }
        None => Value::Object(Default::default()),
    };
    for (path, value) in cli.command.overrides(cli.seed) {
        apply(&mut doc, path, value).map_err(Failure::Config)?;
    }
    serde_json::from_value(doc).map_err(|e| Failure::Config(format!("invalid {} config: {e}", cli.command.name())))
}

fn emit<R: Report>(report: &R, out: &Path, timestamp: &str) -> Result<Vec<PathBuf>, Failure> {
    let paths = write_report(report, out, timestamp)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    Ok(paths)
}

fn verify(seed: u64) -> Result<(), Failure> {
    let outcomes = run_all(seed)?;
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    println!("{:<width$}  result  detail", "check");
    for o in &outcomes {
        println!("{:<width$}  {:<6}  {}", o.name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure::Numeric(format!("{failed} of {} checks failed", outcomes.len())));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Other(format!("thread pool: {e}")))?;
    }
    let timestamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let out = cli.out.as_path();
    match &cli.command {
        Command::Verify => {
            if cli.config.is_some() {
                return Err(Failure::Config("verify takes no config file".into()));
            }
            verify(cli.seed.unwrap_or(0))?;
        }
        Command::Landscape(_) => {
            let r = loss_landscape(&resolve::<LandscapeConfig>(cli)?, None)?;
            emit(&r, out, &timestamp)?;
            println!(
                "reference loss {:.6}, surface max {:.6}, top eigenvalues {:.6e} {:.6e}",
                r.reference_loss, r.max(), r.directions.eigenvalues[0], r.directions.eigenvalues[1]
            );
        }
        Command::VarianceScan(_) => {
            let r = variance_scan(&resolve::<VarianceScanConfig>(cli)?)?;
            emit(&r, out, &timestamp)?;
            for t in &r.trends {
                println!("seed {}: spearman {:.3}, var(last)/var(first) {:.4}", t.seed, t.spearman, t.last_over_first);
            }
        }
        Command::Regression(_) => {
            let r = regression_experiment(&resolve::<RegressionConfig>(cli)?)?;
            emit(&r, out, &timestamp)?;
            println!(
                "{} head, {} outputs: member-mean final mse {:.6}, ensemble-prediction mse {:.6}",
                r.head, r.n_outputs, r.ensemble_mean_final_loss, r.mean_prediction_loss
            );
        }
        Command::Uq(_) => {
            let r = uq_experiment(&resolve::<UqConfig>(cli)?)?;
            emit(&r, out, &timestamp)?;
            println!(
                "epistemic gap/quiet {:.3}, aleatoric noisy/quiet {:.3}, {} members used",
                r.regions.epistemic_ratio(),
                r.regions.aleatoric_ratio(),
                r.used_seeds.len()
            );
        }
        Command::ShotNoise(_) => {
            let r = shot_noise_scan(&resolve::<ShotNoiseConfig>(cli)?)?;
            emit(&r, out, &timestamp)?;
            let worst = r.rows.iter().map(|x| x.ratio.ln().abs()).fold(0.0, f64::max).exp();
            println!("worst variance ratio factor {worst:.3}, monotone in shots: {}", r.monotone_in_shots());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 after printing usage for bad flags.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
