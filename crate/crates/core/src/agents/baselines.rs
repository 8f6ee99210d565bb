//! Comparison agents: sliding-window matching pursuit (SW-MP), its UCB
//! variant (UCB-MP), and sparse alternating gradient descent (SA-GD).
//!
//! All three share the AD-Lasso epoch schedule and refit from the rows of
//! the epoch that just ended.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, least_squares, norm2, Matrix};

use super::{
    argmax_random, combined_schedule, datapoor_boundary, datarich_boundary, default_l, greedy_action, tie_rng, Agent, AgentContext,
    EpochDiagnostic, EpochEnd, History,
};

/// Rows `times` of the lagged design over `h` lags, with their rewards.
#[derive(Debug, Clone)]
pub struct Window<'a> {
    pub contexts: &'a [Vec<f64>],
    pub times: Vec<usize>,
    pub rewards: Vec<f64>,
    pub h: usize,
}

impl<'a> Window<'a> {
    pub fn from_history(history: &'a History, rows: RangeInclusive<usize>, h: usize) -> Self {
        let times: Vec<usize> = rows.collect();
        let rewards = times.iter().map(|&t| history.reward(t)).collect();
        Self {
            contexts: &history.contexts,
            times,
            rewards,
            h,
        }
    }

    fn lagged(&self, t: usize, k: usize) -> Option<&'a [f64]> {
        if k >= t {
            None
        } else {
            self.contexts.get(t - k - 1).map(Vec::as_slice)
        }
    }

    fn d(&self) -> usize {
        self.contexts.first().map_or(0, Vec::len)
    }

    /// `c_τ = ⟨ξ_τ, θ⟩` for `τ` in `[lo, hi]`, returned with `lo`.
    fn projections(&self, theta: &[f64]) -> (usize, Vec<f64>) {
        let hi = self.times.iter().copied().max().unwrap_or(0);
        let lo = self.times.iter().copied().min().unwrap_or(1).saturating_sub(self.h - 1).max(1);
        let c = (lo..=hi).map(|tau| dot(&self.contexts[tau - 1], theta)).collect();
        (lo, c)
    }

    fn predictions(&self, w: &[f64], lo: usize, c: &[f64]) -> Vec<f64> {
        self.times
            .iter()
            .map(|&t| {
                let mut acc = 0.0;
                for (k, &wk) in w.iter().enumerate() {
                    if k >= t || t - k < lo {
                        break;
                    }
                    acc += wk * c[t - k - lo];
                }
                acc
            })
            .collect()
    }
}

/// Lag `k*` (0-based) maximizing `‖Ξ^kᵀ r‖ / ‖Ξ^k‖_F`; ties go to the smallest lag.
pub fn sw_mp_locate(win: &Window<'_>) -> Result<usize> {
    let d = win.d();
    let mut best: Option<(usize, f64)> = None;
    for k in 0..win.h {
        let mut corr = vec![0.0; d];
        let mut fro = 0.0;
        for (&t, &r) in win.times.iter().zip(&win.rewards) {
            if let Some(x) = win.lagged(t, k) {
                crate::linalg::axpy(r, x, &mut corr);
                fro += dot(x, x);
            }
        }
        if fro > 0.0 {
            let score = norm2(&corr) / fro.sqrt();
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((k, score));
            }
        }
    }
    match best {
        Some((k, score)) if score > 0.0 => Ok(k),
        _ => Err(Error::EmptyWindow),
    }
}

/// [`sw_mp_locate`] on an explicit design whose block columns have size `d`.
pub fn locate_block(design: &Matrix, r: &[f64], d: usize) -> Result<usize> {
    if d == 0 || design.cols() % d != 0 {
        return Err(Error::DimensionMismatch {
            what: "design columns vs block size",
            expected: d,
            found: design.cols(),
        });
    }
    if r.len() != design.rows() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: design.rows(),
            found: r.len(),
        });
    }
    let atr = design.t_matvec(r);
    let mut best: Option<(usize, f64)> = None;
    for k in 0..design.cols() / d {
        let mut fro = 0.0;
        for i in 0..design.rows() {
            fro += design.row(i)[k * d..(k + 1) * d].iter().map(|x| x * x).sum::<f64>();
        }
        if fro > 0.0 {
            let score = norm2(&atr[k * d..(k + 1) * d]) / fro.sqrt();
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((k, score));
            }
        }
    }
    match best {
        Some((k, score)) if score > 0.0 => Ok(k),
        _ => Err(Error::EmptyWindow),
    }
}

/// Least squares of the window rewards on the contexts at lag `k`.
fn lag_regression(win: &Window<'_>, k: usize, ridge_fallback: f64) -> Vec<f64> {
    let d = win.d();
    let rows: Vec<Vec<f64>> = win
        .times
        .iter()
        .map(|&t| win.lagged(t, k).map_or_else(|| vec![0.0; d], <[f64]>::to_vec))
        .collect();
    let a = Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(rows.len(), d));
    least_squares(&a, &win.rewards, ridge_fallback)
}

fn epoch_rows(end: usize, kind: EpochEnd, l: usize, h: usize) -> RangeInclusive<usize> {
    let start = match kind {
        EpochEnd::DataPoor(i) => datapoor_boundary(i - 1, l),
        EpochEnd::DataRich(1) => h,
        EpochEnd::DataRich(j) => datarich_boundary(j - 1, h),
    };
    start + 1..=end
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm2(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

fn phase_name(kind: EpochEnd) -> (&'static str, u32) {
    match kind {
        EpochEnd::DataPoor(i) => ("datapoor", i),
        EpochEnd::DataRich(j) => ("datarich", j),
    }
}

/// Shared bookkeeping: history plus position in the epoch schedule.
struct Scheduled {
    name: String,
    ctx: AgentContext,
    seed: u64,
    l: usize,
    history: History,
    schedule: Vec<(usize, EpochEnd)>,
    next: usize,
}

impl Scheduled {
    fn new(name: &str, ctx: AgentContext, seed: u64, l: Option<usize>) -> Self {
        let l = l.unwrap_or_else(|| default_l(ctx.s, ctx.d, ctx.h));
        Self {
            name: name.into(),
            ctx,
            seed,
            l,
            history: History::default(),
            schedule: combined_schedule(l, ctx.h, ctx.horizon),
            next: 0,
        }
    }

    /// Records the round and reports whether it closes an epoch.
    fn record(&mut self, round: usize, chosen: &[f64], reward: f64) -> Option<(EpochEnd, RangeInclusive<usize>)> {
        self.history.push(chosen, reward);
        match self.schedule.get(self.next) {
            Some(&(end, kind)) if end == round => {
                self.next += 1;
                Some((kind, epoch_rows(end, kind, self.l, self.ctx.h)))
            }
            _ => None,
        }
    }

    fn diagnostic(&self, round: usize, kind: EpochEnd, rows: usize, theta_hat: &[f64]) -> EpochDiagnostic {
        let (phase, epoch) = phase_name(kind);
        EpochDiagnostic {
            round,
            phase: phase.into(),
            epoch,
            rows,
            converged: true,
            theta_hat: theta_hat.to_vec(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwMpParams {
    pub l: Option<usize>,
    pub ridge_fallback: f64,
}

impl Default for SwMpParams {
    fn default() -> Self {
        Self {
            l: None,
            ridge_fallback: 1e-8,
        }
    }
}

pub struct SwMp {
    base: Scheduled,
    params: SwMpParams,
    theta_hat: Vec<f64>,
    k_star: Option<usize>,
}

impl SwMp {
    pub fn new(name: &str, ctx: AgentContext, params: SwMpParams, seed: u64) -> Self {
        Self {
            base: Scheduled::new(name, ctx, seed, params.l),
            params,
            theta_hat: vec![0.0; ctx.d],
            k_star: None,
        }
    }

    pub fn k_star(&self) -> Option<usize> {
        self.k_star
    }
}

impl Agent for SwMp {
    fn name(&self) -> &str {
        &self.base.name
    }

    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize {
        greedy_action(contexts, &self.theta_hat, &mut tie_rng(self.base.seed, round))
    }

    fn observe(&mut self, round: usize, chosen: &[f64], reward: f64) -> Result<Option<EpochDiagnostic>> {
        let Some((kind, rows)) = self.base.record(round, chosen, reward) else {
            return Ok(None);
        };
        let win = Window::from_history(&self.base.history, rows, self.base.ctx.h);
        let mut kept = true;
        if let Ok(k) = sw_mp_locate(&win) {
            self.k_star = Some(k);
            if let Some(u) = unit(&lag_regression(&win, k, self.params.ridge_fallback)) {
                self.theta_hat = u;
                kept = false;
            }
        }
        let mut diag = self.base.diagnostic(round, kind, win.times.len(), &self.theta_hat);
        diag.k_star = self.k_star;
        diag.kept_previous = kept;
        Ok(Some(diag))
    }

    fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcbMpParams {
    pub l: Option<usize>,
    pub ridge: f64,
    pub alpha: f64,
}

impl Default for UcbMpParams {
    fn default() -> Self {
        Self {
            l: None,
            ridge: 1.0,
            alpha: 1.0,
        }
    }
}

impl UcbMpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::config("ridge", "must be positive and finite"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be nonnegative and finite"));
        }
        Ok(())
    }
}

/// Ridge LinUCB on pairs `(ξ_{t−k*}, r_t)`, with `k*` from the SW-MP test.
pub struct UcbMp {
    base: Scheduled,
    params: UcbMpParams,
    k_star: Option<usize>,
    a_inv: Matrix,
    b: Vec<f64>,
    theta: Vec<f64>,
    theta_unit: Vec<f64>,
}

impl UcbMp {
    pub fn new(name: &str, ctx: AgentContext, params: UcbMpParams, seed: u64) -> Self {
        let d = ctx.d;
        let mut s = Self {
            base: Scheduled::new(name, ctx, seed, params.l),
            a_inv: Matrix::zeros(d, d),
            b: vec![0.0; d],
            theta: vec![0.0; d],
            theta_unit: vec![0.0; d],
            k_star: None,
            params,
        };
        s.reset();
        s
    }

    pub fn k_star(&self) -> Option<usize> {
        self.k_star
    }

    fn reset(&mut self) {
        let d = self.base.ctx.d;
        self.a_inv = Matrix::identity(d).scaled(1.0 / self.params.ridge);
        self.b = vec![0.0; d];
        self.theta = vec![0.0; d];
    }

    fn add_pair(&mut self, x: &[f64], r: f64) {
        // Sherman-Morrison update of A⁻¹.
        let ax = self.a_inv.matvec(x);
        let denom = 1.0 + dot(x, &ax);
        let d = x.len();
        for i in 0..d {
            for j in 0..d {
                self.a_inv[(i, j)] -= ax[i] * ax[j] / denom;
            }
        }
        crate::linalg::axpy(r, x, &mut self.b);
    }

    fn pair_for(&self, t: usize, k: usize) -> Option<(Vec<f64>, f64)> {
        (t > k).then(|| (self.base.history.contexts[t - k - 1].clone(), self.base.history.reward(t)))
    }

    fn refresh_theta(&mut self) {
        self.theta = self.a_inv.matvec(&self.b);
        if let Some(u) = unit(&self.theta) {
            self.theta_unit = u;
        }
    }
}

impl Agent for UcbMp {
    fn name(&self) -> &str {
        &self.base.name
    }

    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize {
        let mut rng = tie_rng(self.base.seed, round);
        if self.k_star.is_none() {
            return greedy_action(contexts, &self.theta, &mut rng);
        }
        let scores: Vec<f64> = contexts
            .iter()
            .map(|x| {
                let width = dot(x, &self.a_inv.matvec(x)).max(0.0).sqrt();
                dot(x, &self.theta) + self.params.alpha * width
            })
            .collect();
        argmax_random(&scores, &mut rng)
    }

    fn observe(&mut self, round: usize, chosen: &[f64], reward: f64) -> Result<Option<EpochDiagnostic>> {
        let epoch = self.base.record(round, chosen, reward);
        let mut diag = None;
        if let Some((kind, rows)) = epoch {
            let win = Window::from_history(&self.base.history, rows, self.base.ctx.h);
            let located = sw_mp_locate(&win).ok();
            let n_rows = win.times.len();
            if located.is_some() && located != self.k_star {
                self.k_star = located;
                self.reset();
                let k = located.unwrap_or_default();
                for t in 1..=round {
                    if let Some((x, r)) = self.pair_for(t, k) {
                        self.add_pair(&x, r);
                    }
                }
                self.refresh_theta();
                let mut dg = self.base.diagnostic(round, kind, n_rows, &self.theta_unit);
                dg.k_star = self.k_star;
                return Ok(Some(dg));
            }
            let mut dg = self.base.diagnostic(round, kind, n_rows, &self.theta_unit);
            dg.k_star = self.k_star;
            dg.kept_previous = located.is_none();
            diag = Some(dg);
        }
        if let Some(k) = self.k_star {
            if let Some((x, r)) = self.pair_for(round, k) {
                self.add_pair(&x, r);
                self.refresh_theta();
            }
        }
        if let Some(dg) = diag.as_mut() {
            dg.theta_hat = self.theta_unit.clone();
        }
        Ok(diag)
    }

    fn theta_hat(&self) -> &[f64] {
        &self.theta_unit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaGdParams {
    pub l: Option<usize>,
    pub beta: f64,
    /// Stop once the mean squared residual falls to this level.
    pub eps: f64,
    pub max_steps: usize,
}

impl Default for SaGdParams {
    fn default() -> Self {
        Self {
            l: None,
            beta: 0.01,
            eps: 1e-6,
            max_steps: 2000,
        }
    }
}

impl SaGdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta", "must be positive and finite"));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::config("eps", "must be nonnegative"));
        }
        Ok(())
    }
}

/// `f(θ, w) = Σ_t (r_t − θᵀ Z_t w)²` with `Z_t = [ξ_t, ξ_{t−1}, …]`.
pub fn sagd_loss(win: &Window<'_>, theta: &[f64], w: &[f64]) -> f64 {
    let (lo, c) = win.projections(theta);
    let pred = win.predictions(w, lo, &c);
    pred.iter().zip(&win.rewards).map(|(p, r)| (r - p).powi(2)).sum()
}

/// `(∇_θ f, ∇_w f)`.
pub fn sagd_gradients(win: &Window<'_>, theta: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (lo, c) = win.projections(theta);
    let pred = win.predictions(w, lo, &c);
    let mut g_w = vec![0.0; w.len()];
    let mut coef = vec![0.0; c.len()];
    for ((&t, p), r) in win.times.iter().zip(&pred).zip(&win.rewards) {
        let res = r - p;
        for (k, &wk) in w.iter().enumerate() {
            if k >= t || t - k < lo {
                break;
            }
            g_w[k] -= 2.0 * res * c[t - k - lo];
            coef[t - k - lo] += res * wk;
        }
    }
    let mut g_theta = vec![0.0; theta.len()];
    for (i, &a) in coef.iter().enumerate() {
        if a != 0.0 {
            crate::linalg::axpy(-2.0 * a, &win.contexts[lo + i - 1], &mut g_theta);
        }
    }
    (g_theta, g_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaGdFit {
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub mean_loss: f64,
    pub iterations: usize,
    pub diverged: bool,
}

const DIVERGENCE_RUN: usize = 50;

fn descend(win: &Window<'_>, theta0: &[f64], w0: &[f64], beta: f64, eps: f64, max_steps: usize) -> SaGdFit {
    let n = win.times.len() as f64;
    let mut theta = theta0.to_vec();
    let mut w = w0.to_vec();
    let mut loss = sagd_loss(win, &theta, &w) / n;
    let mut rising = 0;
    let mut steps = 0;
    while steps < max_steps && loss > eps {
        steps += 1;
        let (g_theta, _) = sagd_gradients(win, &theta, &w);
        crate::linalg::axpy(-beta / n, &g_theta, &mut theta);
        let (_, g_w) = sagd_gradients(win, &theta, &w);
        crate::linalg::axpy(-beta / n, &g_w, &mut w);
        let next = sagd_loss(win, &theta, &w) / n;
        if !next.is_finite() {
            rising = DIVERGENCE_RUN;
        } else if next > loss {
            rising += 1;
        } else {
            rising = 0;
        }
        if rising >= DIVERGENCE_RUN {
            return SaGdFit {
                theta,
                w,
                mean_loss: next,
                iterations: steps,
                diverged: true,
            };
        }
        let stalled = (loss - next).abs() <= 1e-12 * loss;
        loss = next;
        if stalled {
            break;
        }
    }
    SaGdFit {
        theta,
        w,
        mean_loss: loss,
        iterations: steps,
        diverged: false,
    }
}

/// Alternating gradient descent from `(θ₀, w₀)`, then top-`s` hard
/// thresholding of `w`. On divergence the step is halved and the run
/// restarted once; a second divergence returns the start point flagged.
pub fn sagd_fit(win: &Window<'_>, theta0: &[f64], w0: &[f64], s: usize, params: &SaGdParams) -> SaGdFit {
    if win.times.is_empty() {
        return SaGdFit {
            theta: theta0.to_vec(),
            w: w0.to_vec(),
            mean_loss: 0.0,
            iterations: 0,
            diverged: false,
        };
    }
    let mut fit = descend(win, theta0, w0, params.beta, params.eps, params.max_steps);
    if fit.diverged {
        let iters = fit.iterations;
        fit = descend(win, theta0, w0, params.beta / 2.0, params.eps, params.max_steps);
        fit.iterations += iters;
        if fit.diverged {
            fit.theta = theta0.to_vec();
            fit.w = w0.to_vec();
        }
    }
    hard_threshold(&mut fit.w, s);
    if fit.w.iter().sum::<f64>() < 0.0 {
        fit.w.iter_mut().for_each(|x| *x = -*x);
        fit.theta.iter_mut().for_each(|x| *x = -*x);
    }
    fit
}

fn hard_threshold(w: &mut [f64], s: usize) {
    if s >= w.len() {
        return;
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    for &i in &order[s..] {
        w[i] = 0.0;
    }
}

pub struct SaGd {
    base: Scheduled,
    params: SaGdParams,
    theta: Vec<f64>,
    w: Vec<f64>,
    theta_hat: Vec<f64>,
    initialized: bool,
}

impl SaGd {
    pub fn new(name: &str, ctx: AgentContext, params: SaGdParams, seed: u64) -> Self {
        Self {
            base: Scheduled::new(name, ctx, seed, params.l),
            params,
            theta: vec![0.0; ctx.d],
            w: vec![0.0; ctx.h],
            theta_hat: vec![0.0; ctx.d],
            initialized: false,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }
}

impl Agent for SaGd {
    fn name(&self) -> &str {
        &self.base.name
    }

    fn select(&mut self, round: usize, contexts: &[Vec<f64>]) -> usize {
        greedy_action(contexts, &self.theta_hat, &mut tie_rng(self.base.seed, round))
    }

    fn observe(&mut self, round: usize, chosen: &[f64], reward: f64) -> Result<Option<EpochDiagnostic>> {
        let Some((kind, rows)) = self.base.record(round, chosen, reward) else {
            return Ok(None);
        };
        let win = Window::from_history(&self.base.history, rows, self.base.ctx.h);
        let mut k_star = None;
        if !self.initialized {
            // Spectral-style start: the SW-MP lag and its least-squares fit.
            let Ok(k) = sw_mp_locate(&win) else {
                let mut diag = self.base.diagnostic(round, kind, win.times.len(), &self.theta_hat);
                diag.kept_previous = true;
                return Ok(Some(diag));
            };
            let ls = lag_regression(&win, k, 1e-8);
            let n = norm2(&ls);
            if let Some(u) = unit(&ls) {
                self.theta = u;
                self.w = vec![0.0; self.base.ctx.h];
                self.w[k] = n;
                self.initialized = true;
            }
            k_star = Some(k);
        }
        let mut diag = self.base.diagnostic(round, kind, win.times.len(), &self.theta_hat);
        diag.k_star = k_star;
        if !self.initialized {
            diag.kept_previous = true;
            return Ok(Some(diag));
        }
        let fit = sagd_fit(&win, &self.theta, &self.w, self.base.ctx.s, &self.params);
        diag.iterations = fit.iterations;
        diag.flagged = fit.diverged;
        diag.converged = !fit.diverged;
        self.theta = fit.theta;
        self.w = fit.w;
        match unit(&self.theta) {
            Some(u) => self.theta_hat = u,
            None => diag.kept_previous = true,
        }
        diag.theta_hat = self.theta_hat.clone();
        Ok(Some(diag))
    }

    fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }
}
