//! Figure presets.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::agents::{AdLassoParams, AlgorithmSpec, DoublingLassoParams, SaGdParams, SwMpParams, UcbMpParams};
use crate::env::{ContextDist, EnvConfig, WeightPattern};
use crate::error::{Error, Result};
use crate::riplab::{
    lemma1_table, phase_transition_sweep, rip_constant_sweep, EnsembleKind, Lemma1Config, PhaseTransitionConfig, RipConstantConfig,
};

use super::output::{fmt_g12, write_csv, write_json, write_rows};
use super::{prefix_norms, run_experiment, with_workers, AgentEntry, ExperimentSpec, RunSummary, SCHEMA_VERSION};

pub const PRESET_NAMES: &[&str] = &[
    "fig2",
    "fig4",
    "fig5_flat",
    "fig5_spiking",
    "appendix_random_w",
    "appendix_single_w",
    "ripconst",
    "lemma1",
];

/// Sparsities swept by the bandit comparison presets.
pub const SPARSITY_SWEEP: [usize; 4] = [5, 10, 25, 50];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Job {
    Bandit(ExperimentSpec),
    PhaseTransition(PhaseTransitionConfig),
    RipConstant(RipConstantConfig),
    Lemma1(Lemma1Config),
}

/// A named list of jobs; each job writes into its own subdirectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: String,
    pub jobs: Vec<(String, Job)>,
    pub our_choices: Vec<String>,
}

// Multipliers on the printed regularizers. At unit-scale contexts and
// noise 0.1 the printed constants shrink every block to zero.
const POOR_LAMBDA_C: f64 = 0.01;
const RICH_LAMBDA_SCALE: f64 = 0.003;

fn doubling_lasso() -> AlgorithmSpec {
    AlgorithmSpec::DoublingLasso(DoublingLassoParams {
        lambda_c: POOR_LAMBDA_C,
        ..Default::default()
    })
}

fn ad_lasso() -> AlgorithmSpec {
    AlgorithmSpec::AdLasso(AdLassoParams {
        lambda_c: POOR_LAMBDA_C,
        lambda_rich_scale: RICH_LAMBDA_SCALE,
        ..Default::default()
    })
}

fn comparison_agents() -> Vec<AgentEntry> {
    [
        ("ad_lasso", ad_lasso()),
        ("sa_gd", AlgorithmSpec::SaGd(SaGdParams::default())),
        ("sw_mp", AlgorithmSpec::SwMp(SwMpParams::default())),
        ("ucb_mp", AlgorithmSpec::UcbMp(UcbMpParams::default())),
    ]
    .into_iter()
    .map(|(name, algorithm)| AgentEntry { name: name.into(), algorithm })
    .collect()
}

fn bandit_env(h: usize, s: usize, t: usize, w: WeightPattern) -> EnvConfig {
    EnvConfig {
        d: 5,
        k: 10,
        h,
        s,
        t,
        theta: None,
        w,
        noise_std: 0.1,
        context_dist: ContextDist::Uniform,
        seed: 0,
    }
}

fn bandit_job(preset: &str, label: &str, env: EnvConfig, agents: Vec<AgentEntry>, base_seed: u64, choices: &[String]) -> (String, Job) {
    let spec = ExperimentSpec {
        schema_version: SCHEMA_VERSION,
        name: format!("{preset}/{label}"),
        env,
        agents,
        trials: 10,
        base_seed,
        output_dir: PathBuf::from("out").join(preset).join(label),
        our_choices: choices.to_vec(),
    };
    (label.to_string(), Job::Bandit(spec))
}

/// `0.1` at ten lags: every third lag from 0, or every hundredth from 40.
pub fn fig4_weights(h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut early = vec![0.0; h];
    let mut late = vec![0.0; h];
    for k in 0..10 {
        early[3 * k] = 0.1;
        late[40 + 100 * k] = 0.1;
    }
    (early, late)
}

fn sweep_preset(name: &str, base_seed: u64, pattern: WeightPattern, extra: &[&str]) -> Preset {
    let mut choices: Vec<String> = vec![
        "s swept over {5, 10, 25, 50}".into(),
        "K = 10 arms, uniform contexts on [-1, 1]^d, noise_std = 0.1".into(),
        format!("regularizer multipliers: lambda_c = {POOR_LAMBDA_C}, lambda_rich_scale = {RICH_LAMBDA_SCALE}"),
        "10 trials per configuration".into(),
    ];
    choices.extend(extra.iter().map(|s| s.to_string()));
    let jobs = SPARSITY_SWEEP
        .iter()
        .map(|&s| bandit_job(name, &format!("s{s:02}"), bandit_env(100, s, 2000, pattern.clone()), comparison_agents(), base_seed, &choices))
        .collect();
    Preset {
        name: name.into(),
        jobs,
        our_choices: choices,
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    Ok(match name {
        "fig4" => {
            let (early, late) = fig4_weights(1000);
            let choices: Vec<String> = vec![
                "d = 5, K = 10 arms, uniform contexts on [-1, 1]^d, noise_std = 0.1".into(),
                "w1 = 0.1 at lags 0, 3, ..., 27; w2 = 0.1 at lags 40, 140, ..., 940".into(),
                format!("lambda_c = {POOR_LAMBDA_C}, L = max(s, min(s d, h/8)) = 50"),
            ];
            let agents = || {
                vec![AgentEntry {
                    name: "doubling_lasso".into(),
                    algorithm: doubling_lasso(),
                }]
            };
            let jobs = vec![
                bandit_job("fig4", "w1", bandit_env(1000, 10, 999, WeightPattern::Custom { weights: early }), agents(), 4, &choices),
                bandit_job("fig4", "w2", bandit_env(1000, 10, 999, WeightPattern::Custom { weights: late }), agents(), 4, &choices),
            ];
            Preset {
                name: name.into(),
                jobs,
                our_choices: choices,
            }
        }
        "fig5_flat" => sweep_preset(name, 5, WeightPattern::Flat, &[]),
        "fig5_spiking" => sweep_preset(
            name,
            5,
            WeightPattern::Spiking {
                fraction: 0.2,
                mass: 0.8,
            },
            &["spiking mass: 80% of the l1 budget on 20% of the support"],
        ),
        "appendix_random_w" => sweep_preset(name, 7, WeightPattern::Random, &[]),
        "appendix_single_w" => {
            let choices: Vec<String> = vec![
                "K = 10 arms, uniform contexts on [-1, 1]^d, noise_std = 0.1".into(),
                "delay position drawn uniformly per trial".into(),
                format!("regularizer multipliers: lambda_c = {POOR_LAMBDA_C}, lambda_rich_scale = {RICH_LAMBDA_SCALE}"),
            ];
            let env = bandit_env(100, 1, 2000, WeightPattern::SingleDelay { position: None });
            Preset {
                name: name.into(),
                jobs: vec![bandit_job(name, "s01", env, comparison_agents(), 8, &choices)],
                our_choices: choices,
            }
        }
        "fig2" => {
            let cfg = PhaseTransitionConfig {
                kinds: vec![EnsembleKind::Iid, EnsembleKind::CirculantBlock],
                d: 10,
                h: 100,
                s_list: vec![1, 50, 100],
                m_grid: (0..=30).map(|i| 10 * i).collect(),
                trials: 50,
                seed: 1,
                generator_dist: ContextDist::Uniform,
                max_iter: 200,
                tol: 1e-10,
            };
            Preset {
                name: name.into(),
                jobs: vec![("phase_transition".into(), Job::PhaseTransition(cfg))],
                our_choices: vec![
                    "m grid 0..300 in steps of 10, 50 trials per point".into(),
                    "rank-1 alternating least squares with Gauss-Newton refinement, 200 iterations".into(),
                    "generator entries uniform on [-1, 1]; w magnitudes 0.5 + U(0, 1), l1-normalized".into(),
                ],
            }
        }
        "ripconst" => {
            let cfg = |kind| RipConstantConfig {
                kind,
                d: 5,
                h: 100,
                s: 3,
                m_grid: (1..=10).map(|i| 100 * i).collect(),
                support_samples: 500,
                draws: 5,
                seed: 3,
                generator_dist: ContextDist::Rademacher,
            };
            Preset {
                name: name.into(),
                jobs: vec![
                    ("circulant_block".into(), Job::RipConstant(cfg(EnsembleKind::CirculantBlock))),
                    ("iid".into(), Job::RipConstant(cfg(EnsembleKind::Iid))),
                ],
                our_choices: vec!["d = 5, h = 100, s = 3 blocks, m = 100..1000, 5 operator draws, 500 supports".into()],
            }
        }
        "lemma1" => Preset {
            name: name.into(),
            jobs: vec![(
                "lemma1".into(),
                Job::Lemma1(Lemma1Config {
                    p_list: vec![4, 16, 64, 256],
                    trials: 10_000,
                    seed: 11,
                }),
            )],
            our_choices: vec!["p in {4, 16, 64, 256}, 10^4 draws each".into()],
        },
        other => return Err(Error::UnknownPreset(other.into())),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum JobOutput {
    Bandit(RunSummary),
    Table(PathBuf),
}

/// Runs every job of `preset`, writing `out/<job label>/…`.
pub fn run_preset(preset: &Preset, out: &Path, workers: usize) -> Result<Vec<(String, JobOutput)>> {
    std::fs::create_dir_all(out)?;
    write_json(&out.join("preset.json"), preset)?;
    let mut results = Vec::new();
    for (label, job) in &preset.jobs {
        let dir = out.join(label);
        std::fs::create_dir_all(&dir)?;
        let res = match job {
            Job::Bandit(spec) => {
                let mut spec = spec.clone();
                spec.output_dir = dir.clone();
                let summary = run_experiment(&spec, workers)?;
                write_prefix_mass(&spec, &dir)?;
                JobOutput::Bandit(summary)
            }
            Job::PhaseTransition(cfg) => {
                let rows = with_workers(workers, || phase_transition_sweep(cfg))??;
                let path = dir.join("phase_transition.csv");
                write_rows(
                    &path,
                    &["kind", "s", "m", "success_prob", "raw_prob"],
                    rows.iter().map(|r| {
                        let mut cells = vec![r.kind.as_str().to_string()];
                        cells.extend([r.s as f64, r.m as f64, r.success_prob, r.raw_prob].map(fmt_g12));
                        cells
                    }),
                )?;
                JobOutput::Table(path)
            }
            Job::RipConstant(cfg) => {
                let rows = with_workers(workers, || rip_constant_sweep(cfg))??;
                let path = dir.join("rip_constant.csv");
                write_csv(&path, &["m", "delta_estimate"], rows.iter().map(|r| vec![r.m as f64, r.delta_estimate]))?;
                JobOutput::Table(path)
            }
            Job::Lemma1(cfg) => {
                let rows = with_workers(workers, || lemma1_table(cfg))??;
                let path = dir.join("lemma1.csv");
                write_csv(
                    &path,
                    &["p", "prob_violation", "closed_form"],
                    rows.iter().map(|r| vec![r.p as f64, r.prob_violation, r.closed_form]),
                )?;
                JobOutput::Table(path)
            }
        };
        results.push((label.clone(), res));
    }
    Ok(results)
}

/// `k,prefix_norm` of the first trial's `w`.
fn write_prefix_mass(spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    let env = crate::env::Environment::new(spec.trial_env(0))?;
    let norms = prefix_norms(env.weights());
    write_csv(
        &dir.join("prefix_mass.csv"),
        &["k", "prefix_norm"],
        norms.iter().enumerate().map(|(i, n)| vec![(i + 1) as f64, *n]),
    )
}
