//! AD-Lasso against SA-GD, SW-MP and UCB-MP on one flat-w instance.
//!
//! Writes traces to a temporary directory and prints mean final regret.

use longhorizon::agents::{AdLassoParams, AlgorithmSpec};
use longhorizon::env::{EnvConfig, WeightPattern};
use longhorizon::harness::{resolve_workers, run_experiment, AgentEntry, ExperimentSpec, SCHEMA_VERSION};

fn main() -> longhorizon::Result<()> {
    let out = std::env::temp_dir().join("longhorizon-ad-lasso-vs-baselines");
    let agent = |name: &str, algorithm| AgentEntry {
        name: name.into(),
        algorithm,
    };
    let spec = ExperimentSpec {
        schema_version: SCHEMA_VERSION,
        name: "ad_lasso_vs_baselines".into(),
        env: EnvConfig {
            d: 5,
            k: 10,
            h: 100,
            s: 10,
            t: 1500,
            theta: None,
            w: WeightPattern::Flat,
            noise_std: 0.1,
            context_dist: Default::default(),
            seed: 0,
        },
        agents: vec![
            agent(
                "ad_lasso",
                AlgorithmSpec::AdLasso(AdLassoParams {
                    lambda_c: 0.01,
                    lambda_rich_scale: 0.003,
                    ..Default::default()
                }),
            ),
            agent("sa_gd", AlgorithmSpec::SaGd(Default::default())),
            agent("sw_mp", AlgorithmSpec::SwMp(Default::default())),
            agent("ucb_mp", AlgorithmSpec::UcbMp(Default::default())),
            agent("oracle", AlgorithmSpec::Oracle { label: "oracle".into() }),
        ],
        trials: 3,
        base_seed: 42,
        output_dir: out.clone(),
        our_choices: vec![],
    };
    let summary = run_experiment(&spec, resolve_workers(None)?)?;
    for (name, mean, stderr) in &summary.final_regret {
        println!("{name:<10} {mean:>8.1} ± {stderr:.1}");
    }
    println!("traces in {}", out.display());
    Ok(())
}
