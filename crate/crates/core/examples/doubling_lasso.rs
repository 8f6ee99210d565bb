//! Doubling Lasso in the data-poor regime (T < h).
//!
//! Prints each epoch's diagnostics and compares the final regret with an
//! agent that never learns.

use longhorizon::agents::{AgentContext, AlgorithmSpec, DoublingLassoParams};
use longhorizon::env::{cumulative_regret, EnvConfig, Environment, WeightPattern};
use longhorizon::linalg::sin_angle;

fn play(env_cfg: &EnvConfig, spec: &AlgorithmSpec) -> longhorizon::Result<f64> {
    let mut env = Environment::new(env_cfg.clone())?;
    let mut agent = spec.build("doubling", AgentContext::from(env_cfg), 1, env.theta())?;
    let mut regret = Vec::new();
    for round in 1..=env_cfg.t {
        let contexts = env.sample_contexts()?.to_vec();
        let a = agent.select(round, &contexts);
        let out = env.step(a)?;
        regret.push(out.instant_regret);
        if let Some(diag) = agent.observe(round, &contexts[a], out.reward)? {
            println!(
                "  round {:>4} epoch {} lambda {:.4} support {:>3} sin = {:.3}",
                diag.round,
                diag.epoch,
                diag.lambda.unwrap_or(0.0),
                diag.support_size.unwrap_or(0),
                sin_angle(&diag.theta_hat, env.theta())
            );
        }
    }
    Ok(*cumulative_regret(&regret).last().unwrap_or(&0.0))
}

fn main() -> longhorizon::Result<()> {
    // Four equal weights within the first ten lags: visible to the first epoch.
    let mut w = vec![0.0; 400];
    for lag in [0, 2, 5, 9] {
        w[lag] = 0.25;
    }
    let env = EnvConfig {
        d: 5,
        k: 10,
        h: 400,
        s: 4,
        t: 399,
        theta: None,
        w: WeightPattern::Custom { weights: w },
        noise_std: 0.1,
        context_dist: Default::default(),
        seed: 3,
    };
    let learner = AlgorithmSpec::DoublingLasso(DoublingLassoParams {
        lambda_c: 0.01,
        ..Default::default()
    });
    println!("doubling lasso, L = default");
    let r = play(&env, &learner)?;
    println!("final regret {r:.1}");

    // Regularization so strong that every epoch returns zero: pure random play.
    let frozen = AlgorithmSpec::DoublingLasso(DoublingLassoParams {
        lambda_c: 100.0,
        ..Default::default()
    });
    println!("no learning");
    let r0 = play(&env, &frozen)?;
    println!("final regret {r0:.1}");
    Ok(())
}
