use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{lambda_datapoor, lambda_datarich, solve, LassoOptions, LassoProblem, LassoSolution};
use crate::linalg::{BlockVector, ToeplitzOperator};

use super::schedule::{difference_operator, difference_response};
use super::{
    combined_schedule, default_l, extract_theta, greedy_action, tie_rng, Agent, AgentContext, ChunkSelection, EpochDiagnostic, EpochEnd,
    EpochSchedule, History,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoublingLassoParams {
    /// Epoch length unit; `max(s, min(s·d, h/8))` when absent.
    pub l: Option<usize>,
    pub gamma: f64,
    /// The constant `c` of the data-poor regularizer.
    pub lambda_c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub warm_start: bool,
}

impl Default for DoublingLassoParams {
    fn default() -> Self {
        Self {
            l: None,
            gamma: 0.05,
            lambda_c: 1.0,
            tol: 1e-8,
            max_iter: 5000,
            warm_start: true,
        }
    }
}

fn check_common(gamma: f64, c: f64, tol: f64, l: Option<usize>) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config("gamma", "must lie in (0, 1)"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("lambda_c", "must be positive and finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    if l == Some(0) {
        return Err(Error::config("l", "must be at least 1"));
    }
    Ok(())
}

impl DoublingLassoParams {
    pub fn validate(&self, _ctx: &AgentContext) -> Result<()> {
        check_common(self.gamma, self.lambda_c, self.tol, self.l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdLassoParams {
    pub l: Option<usize>,
    pub gamma: f64,
    /// Constant `c` for the phase-one regularizer.
    pub lambda_c: f64,
    /// Multiplier on the phase-two regularizer.
    pub lambda_rich_scale: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub warm_start: bool,
}

impl Default for AdLassoParams {
    fn default() -> Self {
        Self {
            l: None,
            gamma: 0.05,
            lambda_c: 1.0,
            lambda_rich_scale: 1.0,
            tol: 1e-8,
            max_iter: 5000,
            warm_start: true,
        }
    }
}

impl AdLassoParams {
    pub fn validate(&self, ctx: &AgentContext) -> Result<()> {
        check_common(self.gamma, self.lambda_c, self.tol, self.l)?;
        if !(self.lambda_rich_scale > 0.0 && self.lambda_rich_scale.is_finite()) {
            return Err(Error::config("lambda_rich_scale", "must be positive and finite"));
        }
        if ctx.horizon < ctx.h {
            return Err(Error::config("T", format!("AD-Lasso needs T >= h (T = {}, h = {})", ctx.horizon, ctx.h)));
        }
        Ok(())
    }
}

/// State shared by both Lasso-based agents.
struct LassoState {
    name: String,
    ctx: AgentContext,
    seed: u64,
    history: History,
    theta_hat: Vec<f64>,
    phi_hat: Option<BlockVector>,
    tol: f64,
    max_iter: usize,
    warm_start: bool,
}

impl LassoState {
    fn new(name: &str, ctx: AgentContext, seed: u64, tol: f64, max_iter: usize, warm_start: bool) -> Self {
        Self {
            name: name.into(),
            ctx,
            seed,
            history: History::default(),
            theta_hat: vec![0.0; ctx.d],
            phi_hat: None,
            tol,
            max_iter,
            warm_start,
        }
    }

    fn options(&self, n_blocks: usize) -> LassoOptions {
        LassoOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            warm_start: if self.warm_start {
                self.phi_hat.as_ref().map(|p| p.resized(n_blocks))
            } else {
                None
            },
        }
    }

    fn datapoor_epoch(&mut self, round: usize, i: u32, l: usize, gamma: f64, c: f64) -> Result<EpochDiagnostic> {
        let chunks = ChunkSelection::for_epoch(i, l)?;
        let n_blocks = chunks.quarter_len().min(self.ctx.h);
        let design = difference_operator(&self.history, &chunks, n_blocks)?.materialize();
        let response = difference_response(&self.history, &chunks);
        let lambda = lambda_datapoor(i, l, self.ctx.d, gamma, c)?;
        let problem = LassoProblem {
            design: design.as_operator(),
            response: &response,
            lambda,
            block_size: self.ctx.d,
            scale: 1.0 / (2 * chunks.quarter_len()) as f64,
        };
        let sol = solve(&problem, &self.options(n_blocks))?;
        self.absorb(sol, round, "datapoor", i, response.len(), lambda)
    }

    fn datarich_epoch(&mut self, round: usize, j: u32, gamma: f64, multiplier: f64) -> Result<EpochDiagnostic> {
        let h = self.ctx.h;
        let rows = (1usize << (j - 1)) * h;
        let times: Vec<usize> = (round + 1 - rows..=round).collect();
        let design = ToeplitzOperator::new(&self.history.contexts, times, h, self.ctx.d)?.materialize();
        let response: Vec<f64> = (round + 1 - rows..=round).map(|t| self.history.reward(t)).collect();
        let lambda = multiplier * lambda_datarich(j, h, self.ctx.d, gamma)?;
        let problem = LassoProblem {
            design: design.as_operator(),
            response: &response,
            lambda,
            block_size: self.ctx.d,
            scale: 1.0 / (2 * rows) as f64,
        };
        let sol = solve(&problem, &self.options(h))?;
        self.absorb(sol, round, "datarich", j, rows, lambda)
    }

    fn absorb(&mut self, sol: LassoSolution, round: usize, phase: &str, epoch: u32, rows: usize, lambda: f64) -> Result<EpochDiagnostic> {
        let support = sol.phi_hat.norm20();
        let usable = sol.converged && support > 0;
        if usable {
            self.theta_hat = extract_theta(&sol.phi_hat)?;
        }
        let diag = EpochDiagnostic {
            round,
            phase: phase.into(),
            epoch,
            rows,
            lambda: Some(lambda),
            iterations: sol.iterations,
            support_size: Some(support),
            converged: sol.converged,
            kept_previous: !usable,
            flagged: !sol.converged,
            k_star: None,
            theta_hat: self.theta_hat.clone(),
            sin_angle: None,
        };
        if sol.converged {
            self.phi_hat = Some(sol.phi_hat);
        }
        Ok(diag)
    }

    fn select(&self, round: usize, contexts: &[Vec<f64>]) -> usize {
        greedy_action(contexts, &self.theta_hat, &mut tie_rng(self.seed, round))
    }
}

/// Greedy play with doubling epochs; at each epoch end the partial block
/// Lasso is solved on differenced chunk data and `θ̂` is re-extracted.
pub struct DoublingLasso {
    state: LassoState,
    params: DoublingLassoParams,
    l: usize,
    schedule: EpochSchedule,
    next: usize,
}

impl DoublingLasso {
    pub fn new(name: &str, ctx: AgentContext, params: DoublingLassoParams, seed: u64) -> Result<Self> {
        params.validate(&ctx)?;
        let l = params.l.unwrap_or_else(|| default_l(ctx.s, ctx.d, ctx.h));
        Ok(Self {
            state: LassoState::new(name, ctx, seed, params.tol, params.max_iter, params.warm_start),
            schedule: EpochSchedule::datapoor(l, ctx.h, ctx.horizon),
            params,
            l,
            next: 0,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn schedule(&self) -> &EpochSchedule {
        &self.schedule
    }
}

impl Agent for DoublingLasso {
    fn name(&self) -> &str {
        &self.state.name
    }

    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize {
        self.state.select(round, contexts)
    }

    fn observe(&mut self, round: usize, chosen: &[f64], reward: f64) -> Result<Option<EpochDiagnostic>> {
        self.state.history.push(chosen, reward);
        if self.schedule.boundaries.get(self.next) != Some(&round) {
            return Ok(None);
        }
        self.next += 1;
        let p = &self.params;
        let (gamma, c) = (p.gamma, p.lambda_c);
        self.state.datapoor_epoch(round, self.next as u32, self.l, gamma, c).map(Some)
    }

    fn theta_hat(&self) -> &[f64] {
        &self.state.theta_hat
    }
}

/// Doubling Lasso up to round `h`, then the full block Lasso over all `h`
/// lags on the later half of each data-rich epoch.
pub struct AdLasso {
    state: LassoState,
    params: AdLassoParams,
    l: usize,
    schedule: Vec<(usize, EpochEnd)>,
    next: usize,
}

impl AdLasso {
    pub fn new(name: &str, ctx: AgentContext, params: AdLassoParams, seed: u64) -> Result<Self> {
        params.validate(&ctx)?;
        let l = params.l.unwrap_or_else(|| default_l(ctx.s, ctx.d, ctx.h));
        Ok(Self {
            state: LassoState::new(name, ctx, seed, params.tol, params.max_iter, params.warm_start),
            schedule: combined_schedule(l, ctx.h, ctx.horizon),
            params,
            l,
            next: 0,
        })
    }

    pub fn schedule(&self) -> &[(usize, EpochEnd)] {
        &self.schedule
    }
}

impl Agent for AdLasso {
    fn name(&self) -> &str {
        &self.state.name
    }

    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize {
        self.state.select(round, contexts)
    }

    fn observe(&mut self, round: usize, chosen: &[f64], reward: f64) -> Result<Option<EpochDiagnostic>> {
        self.state.history.push(chosen, reward);
        let Some(&(end, kind)) = self.schedule.get(self.next) else {
            return Ok(None);
        };
        if end != round {
            return Ok(None);
        }
        self.next += 1;
        let p = &self.params;
        let diag = match kind {
            EpochEnd::DataPoor(i) => self.state.datapoor_epoch(round, i, self.l, p.gamma, p.lambda_c)?,
            EpochEnd::DataRich(j) => self.state.datarich_epoch(round, j, p.gamma, p.lambda_rich_scale)?,
        };
        Ok(Some(diag))
    }

    fn theta_hat(&self) -> &[f64] {
        &self.state.theta_hat
    }
}
