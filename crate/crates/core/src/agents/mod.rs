//! Bandit agents.
//!
//! Agents see only the contexts offered each round, their own choices, and
//! the rewards; the ground truth stays inside the environment.

mod baselines;
mod lasso_agents;
mod schedule;

pub use baselines::{locate_block, sagd_fit, sagd_gradients, sagd_loss, SaGdFit, sw_mp_locate, SaGd, SaGdParams, SwMp, SwMpParams, UcbMp, UcbMpParams, Window};
pub use lasso_agents::{AdLasso, AdLassoParams, DoublingLasso, DoublingLassoParams};
pub use schedule::{
    build_difference_system, combined_schedule, datapoor_boundary, datarich_boundary, ChunkSelection, EpochEnd, EpochSchedule, ScheduleKind,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::Result;
use crate::linalg::{dot, matricize, top_singular_triplet_lenient, BlockVector, PowerIterOptions};
use crate::rng::{stream_rng, Stream};

/// Problem parameters an agent is allowed to know.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentContext {
    pub d: usize,
    pub k: usize,
    pub h: usize,
    pub s: usize,
    pub horizon: usize,
}

impl From<&EnvConfig> for AgentContext {
    fn from(c: &EnvConfig) -> Self {
        Self {
            d: c.d,
            k: c.k,
            h: c.h,
            s: c.s,
            horizon: c.t,
        }
    }
}

/// What happened at one epoch end.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochDiagnostic {
    pub round: usize,
    pub phase: String,
    pub epoch: u32,
    pub rows: usize,
    pub lambda: Option<f64>,
    pub iterations: usize,
    pub support_size: Option<usize>,
    pub converged: bool,
    /// The estimate was not updated (zero Lasso solution or failed solve).
    pub kept_previous: bool,
    pub flagged: bool,
    pub k_star: Option<usize>,
    pub theta_hat: Vec<f64>,
    /// Filled in by the harness, which knows θ.
    pub sin_angle: Option<f64>,
}

pub trait Agent: Send {
    fn name(&self) -> &str;
    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize;
    fn observe(&mut self, round: usize, chosen: &[f64], reward: f64) -> Result<Option<EpochDiagnostic>>;
    fn theta_hat(&self) -> &[f64];
}

/// Chosen contexts and rewards; index `t − 1` holds round `t`.
#[derive(Debug, Clone, Default)]
pub struct History {
    pub contexts: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
}

impl History {
    pub fn push(&mut self, chosen: &[f64], reward: f64) {
        self.contexts.push(chosen.to_vec());
        self.rewards.push(reward);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn reward(&self, t: usize) -> f64 {
        self.rewards[t - 1]
    }

    /// `ξ_t`, or `None` for `t ≤ 0` or beyond the log.
    pub fn context(&self, t: isize) -> Option<&[f64]> {
        if t <= 0 {
            None
        } else {
            self.contexts.get(t as usize - 1).map(Vec::as_slice)
        }
    }
}

/// An arm maximizing `⟨x_a, θ̂⟩`, uniformly among exact ties.
pub fn greedy_action<R: Rng + ?Sized>(contexts: &[Vec<f64>], theta_hat: &[f64], rng: &mut R) -> usize {
    let scores: Vec<f64> = contexts.iter().map(|x| dot(x, theta_hat)).collect();
    argmax_random(&scores, rng)
}

pub(crate) fn argmax_random<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        n => ties[rng.random_range(0..n)],
    }
}

pub(crate) fn tie_rng(seed: u64, round: usize) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, Stream::TieBreak, round as u64)
}

/// Default epoch length unit: `max(s, min(s·d, h/8))`, at least 1.
pub fn default_l(s: usize, d: usize, h: usize) -> usize {
    s.max((s * d).min(h / 8)).max(1)
}

/// Unit direction of the leading left singular vector of `matricize(φ)`.
///
/// Singular vectors carry no sign, but `w ≥ 0`, so the sign that makes the
/// right vector sum nonnegative points along `θ` rather than `−θ`.
pub fn extract_theta(phi: &BlockVector) -> Result<Vec<f64>> {
    let f = top_singular_triplet_lenient(&matricize(phi), PowerIterOptions::default())?;
    let mut u = f.left;
    if f.right.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(u)
}

fn default_oracle_name() -> String {
    "oracle".into()
}

/// Algorithm choice plus hyperparameters, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    DoublingLasso(DoublingLassoParams),
    AdLasso(AdLassoParams),
    SaGd(SaGdParams),
    SwMp(SwMpParams),
    UcbMp(UcbMpParams),
    /// Plays greedily on the true θ. Only the harness can build it.
    Oracle {
        #[serde(default = "default_oracle_name")]
        label: String,
    },
}

impl AlgorithmSpec {
    pub fn validate(&self, ctx: &AgentContext) -> Result<()> {
        match self {
            AlgorithmSpec::DoublingLasso(p) => p.validate(ctx),
            AlgorithmSpec::AdLasso(p) => p.validate(ctx),
            AlgorithmSpec::SaGd(p) => p.validate(),
            AlgorithmSpec::SwMp(_) => Ok(()),
            AlgorithmSpec::UcbMp(p) => p.validate(),
            AlgorithmSpec::Oracle { .. } => Ok(()),
        }
    }

    /// Builds an agent. `theta` is consulted only by the oracle.
    pub fn build(&self, name: &str, ctx: AgentContext, seed: u64, theta: &[f64]) -> Result<Box<dyn Agent>> {
        self.validate(&ctx)?;
        Ok(match self {
            AlgorithmSpec::DoublingLasso(p) => Box::new(DoublingLasso::new(name, ctx, p.clone(), seed)?),
            AlgorithmSpec::AdLasso(p) => Box::new(AdLasso::new(name, ctx, p.clone(), seed)?),
            AlgorithmSpec::SaGd(p) => Box::new(SaGd::new(name, ctx, p.clone(), seed)),
            AlgorithmSpec::SwMp(p) => Box::new(SwMp::new(name, ctx, p.clone(), seed)),
            AlgorithmSpec::UcbMp(p) => Box::new(UcbMp::new(name, ctx, p.clone(), seed)),
            AlgorithmSpec::Oracle { .. } => Box::new(Oracle::new(name, theta.to_vec(), seed)),
        })
    }
}

/// Greedy on the true parameter; its regret is identically zero.
pub struct Oracle {
    name: String,
    theta: Vec<f64>,
    seed: u64,
}

impl Oracle {
    pub fn new(name: &str, theta: Vec<f64>, seed: u64) -> Self {
        Self {
            name: name.into(),
            theta,
            seed,
        }
    }
}

impl Agent for Oracle {
    fn name(&self) -> &str {
        &self.name
    }
    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize {
        greedy_action(contexts, &self.theta, &mut tie_rng(self.seed, round))
    }
    fn observe(&mut self, _round: usize, _chosen: &[f64], _reward: f64) -> Result<Option<EpochDiagnostic>> {
        Ok(None)
    }
    fn theta_hat(&self) -> &[f64] {
        &self.theta
    }
}
