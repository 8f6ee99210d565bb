use longhorizon::env::{cumulative_regret, generate_weights, ContextDist, EnvConfig, Environment, WeightPattern};
use longhorizon::linalg::dot;
use longhorizon::Error;
use proptest::prelude::*;

fn config(seed: u64, noise: f64, w: WeightPattern) -> EnvConfig {
    EnvConfig {
        d: 3,
        k: 4,
        h: 6,
        s: 3,
        t: 40,
        theta: None,
        w,
        noise_std: noise,
        context_dist: ContextDist::Uniform,
        seed,
    }
}

/// Plays arm `round % K` and recomputes every mean reward from the log.
#[test]
fn rewards_follow_the_lagged_model() {
    let mut env = Environment::new(config(5, 0.0, WeightPattern::Random)).unwrap();
    let (w, theta) = (env.weights().to_vec(), env.theta().to_vec());
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    for round in 1..=40 {
        let ctx = env.sample_contexts().unwrap().to_vec();
        let a = round % ctx.len();
        let out = env.step(a).unwrap();
        chosen.push(ctx[a].clone());
        let mut want = 0.0;
        for (i, wi) in w.iter().enumerate() {
            if round > i {
                want += wi * dot(&chosen[round - 1 - i], &theta);
            }
        }
        assert!((out.reward - want).abs() < 1e-12, "round {round}");
        let best = ctx.iter().map(|x| dot(x, &theta)).fold(f64::NEG_INFINITY, f64::max);
        let l1: f64 = w.iter().sum();
        assert!((out.instant_regret - l1 * (best - dot(&ctx[a], &theta))).abs() < 1e-12);
    }
}

#[test]
fn trajectories_are_reproducible() {
    let run = || {
        let mut env = Environment::new(config(11, 0.3, WeightPattern::Flat)).unwrap();
        (1..=40)
            .map(|r| {
                env.sample_contexts().unwrap();
                env.step(r % 4).unwrap().reward
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn contexts_depend_only_on_seed_and_round() {
    let mut a = Environment::new(config(2, 0.1, WeightPattern::Flat)).unwrap();
    let b = Environment::new(config(2, 0.1, WeightPattern::Flat)).unwrap();
    for r in 1..=5 {
        a.sample_contexts().unwrap();
        a.step(0).unwrap();
        assert_eq!(b.contexts_for_round(r + 1).unwrap(), a.contexts_for_round(r + 1).unwrap());
    }
}

#[test]
fn protocol_errors() {
    let mut env = Environment::new(EnvConfig { t: 2, ..config(1, 0.0, WeightPattern::Flat) }).unwrap();
    assert!(matches!(env.step(0), Err(Error::ContextsNotSampled(1))));
    env.sample_contexts().unwrap();
    assert!(matches!(env.step(9), Err(Error::ActionOutOfRange { action: 9, arms: 4 })));
    env.step(0).unwrap();
    env.sample_contexts().unwrap();
    env.step(0).unwrap();
    assert!(matches!(env.sample_contexts(), Err(Error::HorizonExceeded { round: 3, horizon: 2 })));
}

#[test]
fn invalid_configs_name_the_field() {
    let field = |c: EnvConfig| match c.validate() {
        Err(Error::InvalidConfig { field, .. }) => field,
        other => panic!("{other:?}"),
    };
    assert_eq!(field(EnvConfig { d: 0, ..config(0, 0.1, WeightPattern::Flat) }), "d");
    assert_eq!(field(EnvConfig { s: 7, ..config(0, 0.1, WeightPattern::Flat) }), "s");
    assert_eq!(field(EnvConfig { theta: Some(vec![1.0, 1.0, 0.0]), ..config(0, 0.1, WeightPattern::Flat) }), "theta");
    assert_eq!(field(config(0, 0.1, WeightPattern::Custom { weights: vec![0.5, 0.6, 0.0, 0.0, 0.0, 0.0] })), "w");
    assert!(serde_json::from_str::<EnvConfig>(r#"{"d":3,"k":4,"h":6,"s":3,"T":40,"w":"flat","nosie_std":0.1}"#).is_err());
}

#[test]
fn weight_patterns() {
    let flat = generate_weights(&WeightPattern::Flat, 100, 5, 3).unwrap();
    assert_eq!(flat.iter().filter(|x| **x > 0.0).count(), 5);
    assert!((flat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let spike = generate_weights(&WeightPattern::Spiking { fraction: 0.2, mass: 0.8 }, 100, 10, 3).unwrap();
    let mut nz: Vec<f64> = spike.iter().copied().filter(|x| *x > 0.0).collect();
    nz.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(nz.len(), 10);
    assert!((nz[0] + nz[1] - 0.8).abs() < 1e-12);
    let single = generate_weights(&WeightPattern::SingleDelay { position: Some(7) }, 20, 1, 0).unwrap();
    assert_eq!(single[7], 1.0);
}

proptest! {
    #[test]
    fn regret_is_nonnegative_and_cumulative(seed in any::<u64>(), arms in prop::collection::vec(0usize..4, 40)) {
        let mut env = Environment::new(config(seed, 0.1, WeightPattern::Random)).unwrap();
        let mut inst = Vec::new();
        for a in arms {
            env.sample_contexts().unwrap();
            let out = env.step(a).unwrap();
            prop_assert!(out.instant_regret >= 0.0);
            inst.push(out.instant_regret);
        }
        let cum = cumulative_regret(&inst);
        prop_assert!(cum.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn generated_weights_are_feasible(seed in any::<u64>(), s in 1usize..20, which in 0usize..4) {
        let pattern = match which {
            0 => WeightPattern::Flat,
            1 => WeightPattern::Random,
            2 => WeightPattern::Spiking { fraction: 0.2, mass: 0.8 },
            _ => WeightPattern::SingleDelay { position: None },
        };
        let s = if which == 3 { 1 } else { s };
        let w = generate_weights(&pattern, 20, s, seed).unwrap();
        prop_assert!(w.iter().all(|x| *x >= 0.0));
        prop_assert!(w.iter().filter(|x| **x > 0.0).count() <= s);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
