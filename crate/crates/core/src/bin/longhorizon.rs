use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use longhorizon::harness::{self, diagnostic_q, resolve_workers, ExperimentSpec, JobOutput};
use longhorizon::Error;

/// Long-horizon sparse bandit experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads; defaults to $LONGHORIZON_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (JSON).
    Run { spec: PathBuf },
    /// Run a named figure preset.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measurement-operator studies.
    Riplab {
        study: Study,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prefix-mass diagnostic q(w) for a JSON array of weights.
    QDiagnostic {
        weights: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Fig2,
    Ripconst,
    Lemma1,
}

fn fail(kind: &str, message: String, extra: Value) -> ExitCode {
    let mut body = json!({ "error": kind, "message": message });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    eprintln!("{body}");
    ExitCode::FAILURE
}

fn report(e: Error) -> ExitCode {
    let extra = match &e {
        Error::InvalidConfig { field, .. } => json!({ "field": field }),
        _ => json!({}),
    };
    fail(e.kind(), e.to_string(), extra)
}

fn run_preset(name: &str, out: Option<PathBuf>, workers: usize) -> longhorizon::Result<Value> {
    let preset = harness::preset(name)?;
    let out = out.unwrap_or_else(|| PathBuf::from("out").join(name));
    let results = harness::run_preset(&preset, &out, workers)?;
    let jobs: Vec<Value> = results
        .into_iter()
        .map(|(label, res)| match res {
            JobOutput::Bandit(s) => json!({
                "job": label,
                "output_dir": s.output_dir,
                "final_regret": s.final_regret.iter().map(|(a, m, se)| json!({"agent": a, "mean": m, "stderr": se})).collect::<Vec<_>>(),
                "failures": s.metadata.failures.len(),
            }),
            JobOutput::Table(path) => json!({ "job": label, "table": path }),
        })
        .collect();
    Ok(json!({ "preset": name, "output_dir": out, "jobs": jobs }))
}

fn execute(cli: Cli) -> longhorizon::Result<Value> {
    let workers = resolve_workers(cli.workers)?;
    match cli.command {
        Command::Run { spec } => {
            let spec = ExperimentSpec::from_json(&std::fs::read_to_string(&spec)?)?;
            let s = harness::run_experiment(&spec, workers)?;
            Ok(json!({
                "output_dir": s.output_dir,
                "config_hash": s.metadata.config_hash,
                "final_regret": s.final_regret.iter().map(|(a, m, se)| json!({"agent": a, "mean": m, "stderr": se})).collect::<Vec<_>>(),
                "failures": s.metadata.failures,
            }))
        }
        Command::Preset { name, out } => run_preset(&name, out, workers),
        Command::Riplab { study, out } => {
            let name = match study {
                Study::Fig2 => "fig2",
                Study::Ripconst => "ripconst",
                Study::Lemma1 => "lemma1",
            };
            run_preset(name, out, workers)
        }
        Command::QDiagnostic { weights, mu } => {
            let w: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(&weights)?)?;
            let q = diagnostic_q(&w, mu)?;
            Ok(json!({ "h": w.len(), "mu": q.mu, "q": q.q, "alpha": q.alpha }))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string(), json!({})),
    };
    match execute(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => report(e),
    }
}
