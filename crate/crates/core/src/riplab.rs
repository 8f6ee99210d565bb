//! Empirical study of circulant measurement operators.
//!
//! Three experiments: rank-1 recovery phase transitions for iid versus
//! circulant designs, Monte-Carlo lower bounds on sparse RIP constants, and
//! the Fourier-mode witness showing circulant operators fail RIP on rank-1
//! matrices.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::env::ContextDist;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, matricize, norm2, psd_extreme_eigenvalues, top_singular_triplet_lenient, BlockVector, Matrix, PowerIterOptions};
use crate::rng::{combine, hash_str, stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Iid,
    /// Rows are cyclic shifts, by one `d`-block, of one generating sequence.
    CirculantBlock,
    /// Rows are cyclic shifts, by one entry, of one generating sequence.
    CirculantScalar,
}

impl EnsembleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnsembleKind::Iid => "iid",
            EnsembleKind::CirculantBlock => "circulant_block",
            EnsembleKind::CirculantScalar => "circulant_scalar",
        }
    }
}

/// `m` measurements of a `d × h` signal, stored as an `m × dh` matrix whose
/// block column `k` (entries `k·d .. (k+1)·d`) multiplies signal column `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEnsemble {
    pub kind: EnsembleKind,
    pub rows: usize,
    pub d: usize,
    pub h: usize,
    pub generator_dist: ContextDist,
}

impl MeasurementEnsemble {
    /// One draw, scaled by `1/√m`.
    pub fn sample(&self, seed: u64) -> Matrix {
        let (m, d, h) = (self.rows, self.d, self.h);
        let cols = d * h;
        let mut rng = stream_rng(seed, Stream::Measurement, 0);
        let dist = self.generator_dist;
        let scale = if m > 0 { 1.0 / (m as f64).sqrt() } else { 1.0 };
        match self.kind {
            EnsembleKind::Iid => Matrix::from_fn(m, cols, |_, _| scale * dist.sample(&mut rng)),
            EnsembleKind::CirculantBlock => {
                let n = h.max(m);
                let g: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| dist.sample(&mut rng)).collect()).collect();
                Matrix::from_fn(m, cols, |r, c| {
                    let (k, a) = (c / d, c % d);
                    scale * g[(r + n - k % n) % n][a]
                })
            }
            EnsembleKind::CirculantScalar => {
                let n = cols.max(m);
                let g: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
                Matrix::from_fn(m, cols, |r, c| scale * g[(r + n - c % n) % n])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Recovery {
    pub theta_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    /// `‖Φ̂ − Φ*‖_F / ‖Φ*‖_F` when the truth is supplied.
    pub rel_error: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Success threshold on the relative recovery error.
pub const SUCCESS_TOL: f64 = 1e-3;

/// Alternating least squares for `y ≈ op · vec(θ wᵀ)` from a spectral start,
/// with a Gauss-Newton refinement after each sweep.
///
/// The start is the top singular pair of `matricize(opᵀ y)`. Iteration stops
/// when the relative residual falls below `tol`, when it stops improving, or
/// at `max_iter`.
pub fn rank1_recover(y: &[f64], op: &Matrix, d: usize, truth: Option<&BlockVector>, max_iter: usize, tol: f64) -> Result<Rank1Recovery> {
    rank1_from(y, op, d, truth, max_iter, tol, None)
}

fn rank1_from(y: &[f64], op: &Matrix, d: usize, truth: Option<&BlockVector>, max_iter: usize, tol: f64, start: Option<Vec<f64>>) -> Result<Rank1Recovery> {
    if d == 0 || op.cols() % d != 0 {
        return Err(Error::DimensionMismatch {
            what: "operator columns vs d",
            expected: d,
            found: op.cols(),
        });
    }
    if y.len() != op.rows() {
        return Err(Error::DimensionMismatch {
            what: "measurement count",
            expected: op.rows(),
            found: y.len(),
        });
    }
    let h = op.cols() / d;
    let m = op.rows();
    let y_norm = norm2(y);
    let finish = |theta: Vec<f64>, w: Vec<f64>, residual: f64, iterations: usize, converged: bool| {
        let rel_error = truth.map(|t| {
            let est = BlockVector::kron(&w, &theta);
            norm2(&crate::linalg::sub(est.as_slice(), t.as_slice())) / t.norm2().max(f64::MIN_POSITIVE)
        });
        Rank1Recovery {
            theta_hat: theta,
            w_hat: w,
            rel_error,
            residual,
            iterations,
            converged,
        }
    };
    if m == 0 || y_norm == 0.0 {
        return Ok(finish(vec![0.0; d], vec![0.0; h], 0.0, 0, y_norm == 0.0));
    }

    let (mut theta, mut w) = match start {
        Some(theta) => (theta, vec![0.0; h]),
        None => {
            let back = BlockVector::new(op.t_matvec(y), d)?;
            match top_singular_triplet_lenient(&matricize(&back), PowerIterOptions::default()) {
                Ok(f) => {
                    let w = f.right.iter().map(|x| x * f.sigma).collect();
                    (f.left, w)
                }
                Err(Error::DegenerateMatrix) => return Ok(finish(vec![0.0; d], vec![0.0; h], 1.0, 0, false)),
                Err(e) => return Err(e),
            }
        }
    };

    let fill_a_w = |w: &[f64], out: &mut Matrix| {
        for i in 0..m {
            let row = op.row(i);
            let dst = out.row_mut(i);
            dst.iter_mut().for_each(|x| *x = 0.0);
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    crate::linalg::axpy(wk, &row[k * d..(k + 1) * d], dst);
                }
            }
        }
    };
    let fill_a_theta = |theta: &[f64], out: &mut Matrix| {
        for i in 0..m {
            let row = op.row(i);
            for (k, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = crate::linalg::dot(&row[k * d..(k + 1) * d], theta);
            }
        }
    };
    let rel_residual = |a_theta: &Matrix, w: &[f64]| norm2(&crate::linalg::sub(&a_theta.matvec(w), y)) / y_norm;

    let mut a_w = Matrix::zeros(m, d);
    let mut a_theta = Matrix::zeros(m, h);
    let mut joint = Matrix::zeros(m, d + h);
    let mut residual = f64::INFINITY;
    if w.iter().all(|x| *x == 0.0) {
        fill_a_theta(&theta, &mut a_theta);
        w = least_squares(&a_theta, y, 1e-10);
    }
    for it in 1..=max_iter {
        fill_a_w(&w, &mut a_w);
        theta = least_squares(&a_w, y, 1e-10);
        let scale = norm2(&theta);
        if scale == 0.0 {
            return Ok(finish(theta, w, 1.0, it, false));
        }
        theta.iter_mut().for_each(|x| *x /= scale);
        fill_a_theta(&theta, &mut a_theta);
        w = least_squares(&a_theta, y, 1e-10);
        let mut next = rel_residual(&a_theta, &w);

        // Gauss-Newton on (θ, w) jointly: linearize θwᵀ around the current
        // pair and keep the step only if it lowers the residual.
        if next > tol {
            fill_a_w(&w, &mut a_w);
            let r = crate::linalg::sub(y, &a_theta.matvec(&w));
            for i in 0..m {
                let dst = joint.row_mut(i);
                dst[..d].copy_from_slice(a_w.row(i));
                dst[d..].copy_from_slice(a_theta.row(i));
            }
            let step = least_squares(&joint, &r, 1e-10);
            let mut t2: Vec<f64> = theta.iter().zip(&step[..d]).map(|(a, b)| a + b).collect();
            let n2 = norm2(&t2);
            if n2 > 0.0 {
                t2.iter_mut().for_each(|x| *x /= n2);
                let mut a2 = Matrix::zeros(m, h);
                fill_a_theta(&t2, &mut a2);
                let w2 = least_squares(&a2, y, 1e-10);
                let cand = rel_residual(&a2, &w2);
                if cand < next {
                    theta = t2;
                    w = w2;
                    a_theta = a2;
                    next = cand;
                }
            }
        }
        let stalled = next >= residual * (1.0 - 1e-6);
        residual = next;
        if residual <= tol {
            return Ok(finish(theta, w, residual, it, true));
        }
        if stalled {
            return Ok(finish(theta, w, residual, it, false));
        }
    }
    Ok(finish(theta, w, residual, max_iter, false))
}

/// Nondecreasing least-squares fit (pool adjacent violators), equal weights.
pub fn isotonic_increasing(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(x, n)| std::iter::repeat_n(x, n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTransitionConfig {
    pub kinds: Vec<EnsembleKind>,
    pub d: usize,
    pub h: usize,
    pub s_list: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub generator_dist: ContextDist,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub kind: EnsembleKind,
    pub s: usize,
    pub m: usize,
    /// Isotonic in `m`.
    pub success_prob: f64,
    pub raw_prob: f64,
}

/// A random rank-1 target `θ wᵀ` with unit `θ` and `s`-sparse nonnegative `w`
/// of unit ℓ1 norm.
pub fn rank1_target(d: usize, h: usize, s: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let theta = crate::env::random_unit_vector(d, seed);
    let mut rng = stream_rng(seed, Stream::Support, s as u64);
    let mut w = vec![0.0; h];
    let support = sample(&mut rng, h, s.clamp(1, h));
    let mut total = 0.0;
    for p in support {
        let v = 0.5 + rng.random::<f64>();
        w[p] = v;
        total += v;
    }
    w.iter_mut().for_each(|x| *x /= total);
    (theta, w)
}

/// Success probabilities over `(kind, s, m)`. Each `(kind, m, trial)` draws
/// one operator and one `θ`, shared across all sparsities.
pub fn phase_transition_sweep(cfg: &PhaseTransitionConfig) -> Result<Vec<PhaseRow>> {
    if cfg.trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    if cfg.s_list.iter().any(|&s| s == 0 || s > cfg.h) {
        return Err(Error::config("s_list", "sparsities must lie in [1, h]"));
    }
    let jobs: Vec<(EnsembleKind, usize, usize)> = cfg
        .kinds
        .iter()
        .flat_map(|&k| cfg.m_grid.iter().flat_map(move |&m| (0..cfg.trials).map(move |t| (k, m, t))))
        .collect();
    let outcomes: Vec<Result<Vec<bool>>> = jobs
        .par_iter()
        .map(|&(kind, m, trial)| {
            if m == 0 {
                return Ok(vec![false; cfg.s_list.len()]);
            }
            let ens = MeasurementEnsemble {
                kind,
                rows: m,
                d: cfg.d,
                h: cfg.h,
                generator_dist: cfg.generator_dist,
            };
            let op_seed = combine(&[cfg.seed, hash_str(kind.as_str()), m as u64, trial as u64]);
            let op = ens.sample(op_seed);
            let target_seed = combine(&[cfg.seed, trial as u64]);
            cfg.s_list
                .iter()
                .map(|&s| {
                    let (theta, w) = rank1_target(cfg.d, cfg.h, s, target_seed);
                    let phi = BlockVector::kron(&w, &theta);
                    let y = op.matvec(phi.as_slice());
                    let rec = rank1_recover(&y, &op, cfg.d, Some(&phi), cfg.max_iter, cfg.tol)?;
                    Ok(rec.rel_error.is_some_and(|e| e < SUCCESS_TOL))
                })
                .collect()
        })
        .collect();

    let mut success = std::collections::HashMap::new();
    for ((kind, m, _), out) in jobs.iter().zip(outcomes) {
        for (si, ok) in out?.into_iter().enumerate() {
            *success.entry((*kind, si, *m)).or_insert(0usize) += ok as usize;
        }
    }
    let mut rows = Vec::new();
    let mut grid = cfg.m_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    for &kind in &cfg.kinds {
        for (si, &s) in cfg.s_list.iter().enumerate() {
            let raw: Vec<f64> = grid
                .iter()
                .map(|m| *success.get(&(kind, si, *m)).unwrap_or(&0) as f64 / cfg.trials as f64)
                .collect();
            let smooth = isotonic_increasing(&raw);
            for ((m, r), p) in grid.iter().zip(&raw).zip(smooth) {
                rows.push(PhaseRow {
                    kind,
                    s,
                    m: *m,
                    success_prob: p,
                    raw_prob: *r,
                });
            }
        }
    }
    Ok(rows)
}

/// Monte-Carlo lower bound on the RIP constant of order `s`, in units of
/// `unit` adjacent columns: the largest `‖A_Sᵀ A_S − I‖` over sampled supports.
pub fn estimate_rip_constant(op: &Matrix, unit: usize, s: usize, support_samples: usize, seed: u64) -> Result<f64> {
    if unit == 0 || op.cols() % unit != 0 {
        return Err(Error::DimensionMismatch {
            what: "operator columns vs unit",
            expected: unit,
            found: op.cols(),
        });
    }
    let n_units = op.cols() / unit;
    if s == 0 || s > n_units {
        return Err(Error::Domain(format!("sparsity {s} outside [1, {n_units}]")));
    }
    let mut worst: f64 = 0.0;
    for i in 0..support_samples {
        let mut rng = stream_rng(seed, Stream::Support, i as u64);
        let mut units = sample(&mut rng, n_units, s).into_vec();
        units.sort_unstable();
        let cols: Vec<usize> = units.iter().flat_map(|&u| u * unit..(u + 1) * unit).collect();
        let g = op.select_columns(&cols).gram();
        let (lo, hi) = psd_extreme_eigenvalues(&g, 1e-10, 5000);
        worst = worst.max((hi - 1.0).max(1.0 - lo));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipConstantConfig {
    pub kind: EnsembleKind,
    pub d: usize,
    pub h: usize,
    pub s: usize,
    pub m_grid: Vec<usize>,
    pub support_samples: usize,
    /// Operator draws averaged per `m`.
    pub draws: usize,
    pub seed: u64,
    pub generator_dist: ContextDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipRow {
    pub m: usize,
    pub delta_estimate: f64,
}

pub fn rip_constant_sweep(cfg: &RipConstantConfig) -> Result<Vec<RipRow>> {
    let unit = match cfg.kind {
        EnsembleKind::CirculantScalar => 1,
        _ => cfg.d,
    };
    let draws = cfg.draws.max(1);
    cfg.m_grid
        .par_iter()
        .map(|&m| {
            let mut total = 0.0;
            for draw in 0..draws {
                let ens = MeasurementEnsemble {
                    kind: cfg.kind,
                    rows: m,
                    d: cfg.d,
                    h: cfg.h,
                    generator_dist: cfg.generator_dist,
                };
                let seed = combine(&[cfg.seed, m as u64, draw as u64]);
                total += estimate_rip_constant(&ens.sample(seed), unit, cfg.s, cfg.support_samples, seed)?;
            }
            Ok(RipRow {
                m,
                delta_estimate: total / draws as f64,
            })
        })
        .collect()
}

/// `M_p = max_k ||d_k|² − 1|` with `d = DFT(ξ)/√p`.
pub fn fourier_extremum(generator: &[Complex64]) -> f64 {
    let p = generator.len();
    if p == 0 {
        return 0.0;
    }
    let mut buf = generator.to_vec();
    FftPlanner::new().plan_fft_forward(p).process(&mut buf);
    buf.iter().map(|z| (z.norm_sqr() / p as f64 - 1.0).abs()).fold(0.0, f64::max)
}

/// `max_k |‖C̄ f_k‖² − 1|` by explicit matrix-vector products, where
/// `C[i][j] = ξ[(i − j) mod p]`, `C̄ = C/√p` and `(f_k)_j = e^{2πi jk/p}/√p`.
pub fn fourier_extremum_direct(generator: &[Complex64]) -> f64 {
    let p = generator.len();
    let norm = 1.0 / (p as f64).sqrt();
    let mut worst: f64 = 0.0;
    for k in 0..p {
        let f: Vec<Complex64> = (0..p)
            .map(|j| Complex64::from_polar(norm, 2.0 * std::f64::consts::PI * (j * k) as f64 / p as f64))
            .collect();
        let mut energy = 0.0;
        for i in 0..p {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, fj) in f.iter().enumerate() {
                acc += generator[(i + p - j) % p] * fj;
            }
            energy += (acc * norm).norm_sqr();
        }
        worst = worst.max((energy - 1.0).abs());
    }
    worst
}

fn is_composite(p: usize) -> bool {
    p >= 4 && (2..).take_while(|q| q * q <= p).any(|q| p % q == 0)
}

/// Complex Gaussian generator with iid `CN(0, 1)` entries.
pub fn complex_gaussian(p: usize, seed: u64, draw: u64) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, Stream::Generator, draw);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..p)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Fraction of `trials` Gaussian circulant draws with `M_p > 1`.
pub fn lemma1_witness(p: usize, trials: usize, seed: u64) -> Result<f64> {
    if !is_composite(p) {
        return Err(Error::Domain(format!("p = {p} must be composite")));
    }
    if trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(p);
    let mut hits = 0usize;
    for draw in 0..trials {
        let mut buf = complex_gaussian(p, seed, draw as u64);
        fft.process(&mut buf);
        let m = buf.iter().map(|z| (z.norm_sqr() / p as f64 - 1.0).abs()).fold(0.0, f64::max);
        hits += (m > 1.0) as usize;
    }
    Ok(hits as f64 / trials as f64)
}

/// `1 − (1 − e^{−2})^p`: with independent `|d_k|² ~ Exp(1)`,
/// `Pr[||d_k|² − 1| ≤ 1] = 1 − e^{−2}`.
pub fn lemma1_closed_form(p: usize) -> f64 {
    1.0 - (1.0 - (-2.0f64).exp()).powi(p as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Config {
    pub p_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Row {
    pub p: usize,
    pub prob_violation: f64,
    pub closed_form: f64,
}

pub fn lemma1_table(cfg: &Lemma1Config) -> Result<Vec<Lemma1Row>> {
    cfg.p_list
        .iter()
        .map(|&p| {
            Ok(Lemma1Row {
                p,
                prob_violation: lemma1_witness(p, cfg.trials, cfg.seed)?,
                closed_form: lemma1_closed_form(p),
            })
        })
        .collect()
}
