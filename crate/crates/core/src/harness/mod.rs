//! Batch experiment runner.
//!
//! A run is a pure function of its [`ExperimentSpec`]: every trial derives
//! its seeds from `(base_seed, label, trial)`, so the worker count and the
//! order in which trials finish never change a byte of the CSV output.

mod output;
mod presets;

pub use output::{aggregate, fmt_g12, mean_stderr, write_aggregate, write_csv, write_regret_trace, write_rows, Welford};
pub use presets::{fig4_weights, preset, run_preset, Job, JobOutput, Preset, PRESET_NAMES, SPARSITY_SWEEP};

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{AgentContext, AlgorithmSpec, EpochDiagnostic};
use crate::env::{cumulative_regret, EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::linalg::{norm2, sin_angle};
use crate::rng::derive_seed;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "LONGHORIZON_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub name: String,
    pub algorithm: AlgorithmSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// `env.seed` is ignored; each trial's environment seed is derived.
    pub env: EnvConfig,
    pub agents: Vec<AgentEntry>,
    pub trials: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Settings picked by us rather than documented; copied to the metadata.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub our_choices: Vec<String>,
}

fn nest(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig { field, reason } => Error::InvalidConfig {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.agents.is_empty() {
            return Err(Error::config("agents", "at least one agent is required"));
        }
        self.env.validate().map_err(|e| nest("env", e))?;
        let ctx = AgentContext::from(&self.env);
        let mut seen = HashSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            let field = format!("agents[{i}].name");
            if a.name.is_empty() || !a.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::config(field, "must be non-empty and use only [A-Za-z0-9_-]"));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::config(field, format!("duplicate agent name `{}`", a.name)));
            }
            a.algorithm.validate(&ctx).map_err(|e| nest(&format!("agents[{i}].algorithm"), e))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The environment config of one trial.
    pub fn trial_env(&self, trial: usize) -> EnvConfig {
        let mut env = self.env.clone();
        env.seed = derive_seed(self.base_seed, "env", trial as u64);
        env
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub agent: String,
    pub trial: usize,
    pub cum_regret: Vec<f64>,
    pub epochs: Vec<EpochDiagnostic>,
}

/// Plays one agent against one trial's environment for `T` rounds.
pub fn run_trial(spec: &ExperimentSpec, agent_index: usize, trial: usize) -> Result<TrialResult> {
    let entry = spec
        .agents
        .get(agent_index)
        .ok_or_else(|| Error::config("agents", format!("no agent at index {agent_index}")))?;
    let mut env = Environment::new(spec.trial_env(trial))?;
    let seed = derive_seed(spec.base_seed, &entry.name, trial as u64);
    let mut agent = entry.algorithm.build(&entry.name, AgentContext::from(env.config()), seed, env.theta())?;

    let horizon = env.config().t;
    let mut instant = Vec::with_capacity(horizon);
    let mut epochs = Vec::new();
    for round in 1..=horizon {
        let contexts = env.sample_contexts()?.to_vec();
        let action = agent.select(round, &contexts);
        let outcome = env.step(action)?;
        instant.push(outcome.instant_regret);
        if let Some(mut diag) = agent.observe(round, &contexts[action], outcome.reward)? {
            diag.sin_angle = Some(sin_angle(&diag.theta_hat, env.theta()));
            epochs.push(diag);
        }
    }
    Ok(TrialResult {
        agent: entry.name.clone(),
        trial,
        cum_regret: cumulative_regret(&instant),
        epochs,
    })
}

/// Worker count: explicit value, else [`WORKERS_ENV`], else all cores.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        return if n == 0 { Err(Error::config("workers", "must be at least 1")) } else { Ok(n) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, found `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub agent: String,
    pub trial: usize,
    pub kind: String,
    pub error: String,
}

/// Prefix-mass diagnostic for one weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QDiagnostic {
    pub mu: f64,
    pub q: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialWeights {
    pub trial: usize,
    pub w_l2: f64,
    /// At `μ = 1/2`; absent when `‖w‖₂ < 1/2`.
    pub q_half: Option<QDiagnostic>,
    /// At `μ = ‖w‖₂/2`.
    pub q_half_relative: QDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub crate_version: String,
    pub wall_time_seconds: f64,
    pub workers: usize,
    pub trials: usize,
    pub agents: Vec<String>,
    pub our_choices: Vec<String>,
    pub failures: Vec<TrialFailure>,
    pub weights: Vec<TrialWeights>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub metadata: Metadata,
    /// Final mean cumulative regret per agent, in spec order.
    pub final_regret: Vec<(String, f64, f64)>,
}

pub fn trace_file(dir: &Path, agent: &str, trial: usize) -> PathBuf {
    dir.join(format!("{agent}_{trial:04}.csv"))
}

pub fn epochs_file(dir: &Path, agent: &str, trial: usize) -> PathBuf {
    dir.join(format!("{agent}_{trial:04}_epochs.json"))
}

pub fn aggregate_file(dir: &Path, agent: &str) -> PathBuf {
    dir.join(format!("{agent}_agg.csv"))
}

/// Runs every `(agent, trial)` pair and writes traces, sidecars, aggregates
/// and `metadata.json` under `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<RunSummary> {
    spec.validate()?;
    let started = Instant::now();
    let dir = spec.output_dir.clone();
    std::fs::create_dir_all(&dir)?;

    let jobs: Vec<(usize, usize)> = (0..spec.agents.len()).flat_map(|a| (0..spec.trials).map(move |t| (a, t))).collect();
    let outcomes: Vec<Result<TrialResult>> = with_workers(workers, || {
        jobs.par_iter()
            .map(|&(a, t)| {
                let res = run_trial(spec, a, t)?;
                write_regret_trace(&trace_file(&dir, &res.agent, t), &res.cum_regret)?;
                output::write_json(&epochs_file(&dir, &res.agent, t), &res.epochs)?;
                Ok(res)
            })
            .collect()
    })?;

    let mut failures = Vec::new();
    let mut by_agent: Vec<Vec<TrialResult>> = vec![Vec::new(); spec.agents.len()];
    for (&(a, t), out) in jobs.iter().zip(outcomes) {
        match out {
            Ok(r) => by_agent[a].push(r),
            Err(e) => failures.push(TrialFailure {
                agent: spec.agents[a].name.clone(),
                trial: t,
                kind: e.kind().into(),
                error: e.to_string(),
            }),
        }
    }

    let mut final_regret = Vec::new();
    for (entry, results) in spec.agents.iter().zip(&by_agent) {
        if results.is_empty() {
            continue;
        }
        let traces: Vec<&[f64]> = results.iter().map(|r| r.cum_regret.as_slice()).collect();
        let agg = aggregate(&traces);
        write_aggregate(&aggregate_file(&dir, &entry.name), &agg)?;
        if let Some(&(m, s)) = agg.last() {
            final_regret.push((entry.name.clone(), m, s));
        }
    }

    let weights = (0..spec.trials)
        .map(|t| {
            let env = Environment::new(spec.trial_env(t))?;
            trial_weights(t, env.weights())
        })
        .collect::<Result<Vec<_>>>()?;
    let metadata = Metadata {
        schema_version: SCHEMA_VERSION,
        name: spec.name.clone(),
        config_hash: spec.config_hash(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        workers,
        trials: spec.trials,
        agents: spec.agents.iter().map(|a| a.name.clone()).collect(),
        our_choices: spec.our_choices.clone(),
        failures,
        weights,
    };
    output::write_json(&dir.join("metadata.json"), &metadata)?;
    Ok(RunSummary {
        output_dir: dir,
        metadata,
        final_regret,
    })
}

fn trial_weights(trial: usize, w: &[f64]) -> Result<TrialWeights> {
    let norm = norm2(w);
    Ok(TrialWeights {
        trial,
        w_l2: norm,
        q_half: diagnostic_q(w, 0.5).ok(),
        q_half_relative: diagnostic_q(w, norm / 2.0)?,
    })
}

/// Smallest prefix length `q` with `‖w_{1..q}‖₂ ≥ μ`, and `α = log_h q`.
pub fn diagnostic_q(w: &[f64], mu: f64) -> Result<QDiagnostic> {
    if w.is_empty() {
        return Err(Error::Domain("weight vector is empty".into()));
    }
    if w.iter().any(|x| !x.is_finite()) || !mu.is_finite() {
        return Err(Error::NonFinite("diagnostic_q"));
    }
    if mu <= 0.0 {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    let total: f64 = w.iter().map(|x| x * x).sum();
    let target = mu * mu * (1.0 - 1e-12);
    if target > total {
        return Err(Error::MassUnreachable { mu, norm: total.sqrt() });
    }
    let mut acc = 0.0;
    let mut q = w.len();
    for (i, x) in w.iter().enumerate() {
        acc += x * x;
        if acc >= target {
            q = i + 1;
            break;
        }
    }
    let h = w.len();
    let alpha = if h == 1 { 0.0 } else { (q as f64).ln() / (h as f64).ln() };
    Ok(QDiagnostic { mu, q, alpha })
}

/// `‖w_{1..k}‖₂` for `k = 1..=h`.
pub fn prefix_norms(w: &[f64]) -> Vec<f64> {
    w.iter()
        .scan(0.0, |acc, x| {
            *acc += x * x;
            Some(acc.sqrt())
        })
        .collect()
}
