//! Bandit environment with long-horizon rewards.
//!
//! The reward in round `t` is `Σ_{i<h} w_i ⟨ξ_{t−i}, θ⟩ + ε_t`, where `ξ_τ` is
//! the context chosen in round `τ` (zero for `τ ≤ 0`). Regret is the
//! pseudo-regret `‖w‖₁ (⟨x*, θ⟩ − ⟨x_{a_t}, θ⟩)`.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextDist {
    /// Entries iid uniform on `[−1, 1]`.
    #[default]
    Uniform,
    Rademacher,
    /// Standard normal conditioned on `[−1, 1]`.
    TruncatedGaussian,
}

impl ContextDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ContextDist::Uniform => rng.random_range(-1.0..=1.0),
            ContextDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ContextDist::TruncatedGaussian => loop {
                let x: f64 = StandardNormal.sample(rng);
                if x.abs() <= 1.0 {
                    break x;
                }
            },
        }
    }
}

fn default_fraction() -> f64 {
    0.2
}

fn default_mass() -> f64 {
    0.8
}

/// How the lag weights `w` are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightPattern {
    /// `1/s` on `s` positions.
    Flat,
    /// `mass` of the ℓ1 budget on `⌈fraction·s⌉` of the `s` positions.
    Spiking {
        #[serde(default = "default_fraction")]
        fraction: f64,
        #[serde(default = "default_mass")]
        mass: f64,
    },
    /// Uniform random magnitudes on `s` positions, normalized to unit ℓ1.
    Random,
    /// A single unit weight at lag `position` (random when absent).
    SingleDelay {
        #[serde(default)]
        position: Option<usize>,
    },
    Custom { weights: Vec<f64> },
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub d: usize,
    pub k: usize,
    pub h: usize,
    pub s: usize,
    #[serde(rename = "T")]
    pub t: usize,
    /// Drawn uniformly from the unit sphere when absent.
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    pub w: WeightPattern,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    #[serde(default)]
    pub context_dist: ContextDist,
    #[serde(default)]
    pub seed: u64,
}

const NORM_SLACK: f64 = 1e-12;

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("d", self.d), ("k", self.k), ("h", self.h), ("s", self.s), ("T", self.t)];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.s > self.h {
            return Err(Error::config("s", format!("sparsity {} exceeds horizon h = {}", self.s, self.h)));
        }
        if !(0.0..=1.0).contains(&self.noise_std) {
            return Err(Error::config("noise_std", format!("must lie in [0, 1], got {}", self.noise_std)));
        }
        if let Some(theta) = &self.theta {
            if theta.len() != self.d {
                return Err(Error::config("theta", format!("length {} != d = {}", theta.len(), self.d)));
            }
            if theta.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("theta", "non-finite entry"));
            }
            if norm2(theta) > 1.0 + NORM_SLACK {
                return Err(Error::config("theta", "norm exceeds 1"));
            }
        }
        match &self.w {
            WeightPattern::Flat | WeightPattern::Random => {}
            WeightPattern::Spiking { fraction, mass } => {
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return Err(Error::config("w.spiking.fraction", "must lie in (0, 1]"));
                }
                if !(0.0..=1.0).contains(mass) {
                    return Err(Error::config("w.spiking.mass", "must lie in [0, 1]"));
                }
            }
            WeightPattern::SingleDelay { position } => {
                if matches!(position, Some(p) if *p >= self.h) {
                    return Err(Error::config("w.single_delay.position", format!("must be below h = {}", self.h)));
                }
            }
            WeightPattern::Custom { weights } => check_weights(weights, self.h, self.s)?,
        }
        Ok(())
    }
}

fn check_weights(w: &[f64], h: usize, s: usize) -> Result<()> {
    if w.len() != h {
        return Err(Error::config("w", format!("length {} != h = {h}", w.len())));
    }
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::config("w", "entries must be finite and nonnegative"));
    }
    if w.iter().sum::<f64>() > 1.0 + NORM_SLACK {
        return Err(Error::config("w", "l1 norm exceeds 1"));
    }
    let nnz = w.iter().filter(|x| **x != 0.0).count();
    if nnz > s {
        return Err(Error::config("w", format!("{nnz} nonzeros exceed s = {s}")));
    }
    Ok(())
}

/// Materializes a weight pattern for horizon `h` and sparsity `s`.
pub fn generate_weights(pattern: &WeightPattern, h: usize, s: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, Stream::Weights, 0);
    let mut w = vec![0.0; h];
    match pattern {
        WeightPattern::Flat => {
            for p in sample(&mut rng, h, s) {
                w[p] = 1.0 / s as f64;
            }
        }
        WeightPattern::Spiking { fraction, mass } => {
            let support = sample(&mut rng, h, s).into_vec();
            let n_spike = ((fraction * s as f64).ceil() as usize).clamp(1, s);
            if n_spike == s {
                support.iter().for_each(|&p| w[p] = 1.0 / s as f64);
            } else {
                let rest = s - n_spike;
                for (i, &p) in support.iter().enumerate() {
                    w[p] = if i < n_spike {
                        mass / n_spike as f64
                    } else {
                        (1.0 - mass) / rest as f64
                    };
                }
            }
        }
        WeightPattern::Random => {
            let support = sample(&mut rng, h, s).into_vec();
            let raw: Vec<f64> = support.iter().map(|_| rng.random::<f64>() + f64::EPSILON).collect();
            let total: f64 = raw.iter().sum();
            for (&p, v) in support.iter().zip(raw) {
                w[p] = v / total;
            }
        }
        WeightPattern::SingleDelay { position } => {
            let p = position.unwrap_or_else(|| rng.random_range(0..h));
            w[p] = 1.0;
        }
        WeightPattern::Custom { weights } => {
            check_weights(weights, h, s)?;
            w.copy_from_slice(weights);
        }
    }
    Ok(w)
}

/// Uniform draw from the unit sphere in `R^d`.
pub fn random_unit_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Theta, 0);
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm2(&v);
        if n > 1e-300 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub instant_regret: f64,
    pub optimal_arm: usize,
}

/// One trial's environment. Owns the ground truth, so agents never see it.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    theta: Vec<f64>,
    w: Vec<f64>,
    w_l1: f64,
    /// Last `h` chosen contexts; slot `(round − 1) mod h` holds `ξ_round`.
    ring: Vec<Vec<f64>>,
    round: usize,
    current: Option<Vec<Vec<f64>>>,
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let theta = match &config.theta {
            Some(t) => t.clone(),
            None => random_unit_vector(config.d, config.seed),
        };
        let w = generate_weights(&config.w, config.h, config.s, config.seed)?;
        let w_l1 = w.iter().sum();
        Ok(Self {
            ring: vec![vec![0.0; config.d]; config.h],
            theta,
            w,
            w_l1,
            round: 1,
            current: None,
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// The round whose contexts are sampled next (1-based).
    pub fn round(&self) -> usize {
        self.round
    }

    /// Contexts of `round`, a pure function of `(seed, round)`.
    pub fn contexts_for_round(&self, round: usize) -> Result<Vec<Vec<f64>>> {
        if round == 0 || round > self.config.t {
            return Err(Error::HorizonExceeded {
                round,
                horizon: self.config.t,
            });
        }
        let mut rng = stream_rng(self.config.seed, Stream::Contexts, round as u64);
        let dist = self.config.context_dist;
        Ok((0..self.config.k)
            .map(|_| (0..self.config.d).map(|_| dist.sample(&mut rng)).collect())
            .collect())
    }

    pub fn sample_contexts(&mut self) -> Result<&[Vec<f64>]> {
        if self.current.is_none() {
            self.current = Some(self.contexts_for_round(self.round)?);
        }
        Ok(self.current.as_deref().unwrap_or_default())
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let contexts = self.current.take().ok_or(Error::ContextsNotSampled(self.round))?;
        if action >= contexts.len() {
            let arms = contexts.len();
            self.current = Some(contexts);
            return Err(Error::ActionOutOfRange { action, arms });
        }
        let scores: Vec<f64> = contexts.iter().map(|x| dot(x, &self.theta)).collect();
        let optimal_arm = argmax_first(&scores);
        let instant_regret = self.w_l1 * (scores[optimal_arm] - scores[action]);

        let h = self.config.h;
        let slot = (self.round - 1) % h;
        self.ring[slot].copy_from_slice(&contexts[action]);
        let mut mean = 0.0;
        for (lag, &wi) in self.w.iter().enumerate() {
            if wi == 0.0 || lag >= self.round {
                continue;
            }
            let x = &self.ring[(slot + h - lag) % h];
            mean += wi * dot(x, &self.theta);
        }
        let noise = if self.config.noise_std > 0.0 {
            let mut rng = stream_rng(self.config.seed, Stream::Noise, self.round as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            self.config.noise_std * z
        } else {
            0.0
        };
        self.round += 1;
        Ok(StepOutcome {
            reward: mean + noise,
            instant_regret,
            optimal_arm,
        })
    }
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Prefix sums of per-round regret.
pub fn cumulative_regret(instant: &[f64]) -> Vec<f64> {
    instant
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}
