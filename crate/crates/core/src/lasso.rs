//! Group Lasso for block-sparse recovery.
//!
//! Minimizes `scale · ‖A φ − y‖² + λ ‖φ‖₂,₁` where the ℓ2,1 norm sums the
//! Euclidean norms of consecutive blocks of size `block_size`. The solver is
//! FISTA with function-value restarts; a restart re-does the step from the
//! last accepted iterate, so the accepted objective sequence never increases.

use crate::error::{Error, Result};
use crate::linalg::{norm2, operator_norm_sq, BlockVector, LinearOperator};

pub struct LassoProblem<'a> {
    pub design: &'a dyn LinearOperator,
    pub response: &'a [f64],
    pub lambda: f64,
    pub block_size: usize,
    /// Data-fit weight, e.g. `1/(2m)` for `m` rows.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub phi_hat: BlockVector,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct LassoOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub warm_start: Option<BlockVector>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            warm_start: None,
        }
    }
}

/// Proximal operator of `tau · ‖·‖₂,₁`: shrinks each block toward zero by
/// `tau` in Euclidean norm. Blocks with norm `≤ tau` become exactly zero.
pub fn block_soft_threshold(v: &BlockVector, tau: f64) -> BlockVector {
    let mut out = v.clone();
    block_soft_threshold_in_place(&mut out, tau);
    out
}

fn block_soft_threshold_in_place(v: &mut BlockVector, tau: f64) {
    if tau <= 0.0 {
        return;
    }
    for i in 0..v.n_blocks() {
        let b = v.block_mut(i);
        let n = norm2(b);
        let factor = if n <= tau { 0.0 } else { 1.0 - tau / n };
        b.iter_mut().for_each(|x| *x *= factor);
    }
}

impl LassoProblem<'_> {
    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || !self.scale.is_finite() || self.response.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("lasso problem"));
        }
        if self.lambda < 0.0 {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.scale <= 0.0 {
            return Err(Error::Domain(format!("scale must be positive, got {}", self.scale)));
        }
        if self.response.len() != self.design.nrows() {
            return Err(Error::DimensionMismatch {
                what: "lasso response length",
                expected: self.design.nrows(),
                found: self.response.len(),
            });
        }
        if self.block_size == 0 || self.design.ncols() % self.block_size != 0 {
            return Err(Error::DimensionMismatch {
                what: "lasso columns vs block size",
                expected: self.block_size,
                found: self.design.ncols(),
            });
        }
        Ok(())
    }

    fn n_blocks(&self) -> usize {
        self.design.ncols() / self.block_size
    }

    /// `scale · ‖Aφ − y‖² + λ‖φ‖₂,₁`
    pub fn objective(&self, phi: &BlockVector) -> f64 {
        let fit = self.design.apply(phi.as_slice());
        self.objective_from_fit(&fit, phi)
    }

    fn objective_from_fit(&self, fit: &[f64], phi: &BlockVector) -> f64 {
        let rss: f64 = fit.iter().zip(self.response).map(|(a, b)| (a - b).powi(2)).sum();
        self.scale * rss + self.lambda * phi.norm21()
    }

    /// Gradient of the smooth part given `Aφ`.
    pub fn gradient_from_fit(&self, fit: &[f64]) -> Vec<f64> {
        let resid: Vec<f64> = fit.iter().zip(self.response).map(|(a, b)| a - b).collect();
        let mut g = self.design.apply_adjoint(&resid);
        g.iter_mut().for_each(|x| *x *= 2.0 * self.scale);
        g
    }

    /// Smallest λ for which the zero vector is optimal: `2·scale·‖Aᵀy‖₂,∞`.
    pub fn lambda_max(&self) -> f64 {
        let aty = self.design.apply_adjoint(self.response);
        let v = BlockVector::new(aty, self.block_size).expect("validated block size");
        2.0 * self.scale * v.norm2inf()
    }
}

/// Solves the group Lasso with accelerated proximal gradient.
///
/// Terminates when the relative decrease of the objective between accepted
/// iterates drops to `tol`, or after `max_iter` iterations with
/// `converged = false`.
pub fn solve(problem: &LassoProblem<'_>, opts: &LassoOptions) -> Result<LassoSolution> {
    problem.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {}", opts.tol)));
    }
    let n_blocks = problem.n_blocks();
    let d = problem.block_size;

    let mut x = match &opts.warm_start {
        Some(w) if w.block_size() == d => w.resized(n_blocks),
        Some(w) => {
            return Err(Error::DimensionMismatch {
                what: "warm start block size",
                expected: d,
                found: w.block_size(),
            })
        }
        None => BlockVector::zeros(n_blocks, d),
    };
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lasso warm start"));
    }

    let lip = 2.0 * problem.scale * operator_norm_sq(problem.design, 1e-10, 1000);
    if !lip.is_finite() {
        return Err(Error::NonFinite("lasso design"));
    }
    if lip == 0.0 {
        // A ≡ 0: the penalty alone decides, and zero minimizes it.
        let zero = BlockVector::zeros(n_blocks, d);
        let objective = problem.objective(&zero);
        return Ok(LassoSolution {
            phi_hat: zero,
            objective,
            iterations: 0,
            converged: true,
        });
    }
    // Power iteration approaches ‖A‖² from below; a small margin keeps the
    // step inside the descent region.
    let step = 1.0 / (lip * 1.01);
    let tau = step * problem.lambda;

    let mut ax = problem.design.apply(x.as_slice());
    let mut f_x = problem.objective_from_fit(&ax, &x);
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t = 1.0f64;

    let prox_step = |from: &BlockVector, a_from: &[f64]| -> BlockVector {
        let g = problem.gradient_from_fit(a_from);
        let mut z = from.clone();
        for (zi, gi) in z.as_mut_slice().iter_mut().zip(&g) {
            *zi -= step * gi;
        }
        block_soft_threshold_in_place(&mut z, tau);
        z
    };

    for it in 1..=opts.max_iter {
        let mut z = prox_step(&y, &ay);
        let mut az = problem.design.apply(z.as_slice());
        let mut f_z = problem.objective_from_fit(&az, &z);
        if f_z > f_x {
            // Momentum overshoot: restart from the accepted iterate.
            t = 1.0;
            z = prox_step(&x, &ax);
            az = problem.design.apply(z.as_slice());
            f_z = problem.objective_from_fit(&az, &z);
            if f_z > f_x {
                z = x.clone();
                az = ax.clone();
                f_z = f_x;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        let mut y_next = z.clone();
        for ((yi, zi), xi) in y_next.as_mut_slice().iter_mut().zip(z.as_slice()).zip(x.as_slice()) {
            *yi = zi + beta * (zi - xi);
        }
        ay = az.iter().zip(&ax).map(|(a, b)| a + beta * (a - b)).collect();
        y = y_next;
        t = t_next;

        let decrease = f_x - f_z;
        let denom = f_x.abs().max(f64::MIN_POSITIVE);
        let moved = norm2(&crate::linalg::sub(z.as_slice(), x.as_slice()));
        x = z;
        ax = az;
        f_x = f_z;
        if !f_x.is_finite() {
            return Err(Error::NonFinite("lasso iterate"));
        }
        // The step-length guard keeps a momentary plateau from ending the run.
        if decrease / denom <= opts.tol && moved <= opts.tol.sqrt() * x.norm2().max(1.0) {
            return Ok(LassoSolution {
                phi_hat: x,
                objective: f_x,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(LassoSolution {
        phi_hat: x,
        objective: f_x,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Regularization for the partial (data-poor) program:
/// `c·d·√(2 log(2^i d L / γ) / (2^{i−1} L))`.
pub fn lambda_datapoor(i: u32, l: usize, d: usize, gamma: f64, c: f64) -> Result<f64> {
    if i < 1 || l < 1 || d < 1 {
        return Err(Error::Domain(format!("need i, L, d ≥ 1 (got i={i}, L={l}, d={d})")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("c must be a nonnegative finite number, got {c}")));
    }
    let pow = 2f64.powi(i as i32);
    let log_term = (pow * d as f64 * l as f64 / gamma).ln();
    let rows = pow / 2.0 * l as f64;
    Ok(c * d as f64 * (2.0 * log_term / rows).sqrt())
}

/// Regularization for the full (data-rich) program:
/// `2·√(2d log(2^j h / γ) / (2^{j−1} h))`.
pub fn lambda_datarich(j: u32, h: usize, d: usize, gamma: f64) -> Result<f64> {
    if j < 1 || h < 1 || d < 1 {
        return Err(Error::Domain(format!("need j, h, d ≥ 1 (got j={j}, h={h}, d={d})")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let pow = 2f64.powi(j as i32);
    let log_term = (pow * h as f64 / gamma).ln();
    if log_term <= 0.0 {
        return Err(Error::Domain("log term must be positive".into()));
    }
    let rows = pow / 2.0 * h as f64;
    Ok(2.0 * (2.0 * d as f64 * log_term / rows).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn bv(v: &[f64], d: usize) -> BlockVector {
        BlockVector::new(v.to_vec(), d).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(block_soft_threshold(&bv(&[3.0, 4.0], 2), 5.0).as_slice(), &[0.0, 0.0]);
        assert_eq!(block_soft_threshold(&bv(&[3.0, 4.0], 2), 0.0).as_slice(), &[3.0, 4.0]);
        let out = block_soft_threshold(&bv(&[6.0, 8.0], 2), 5.0);
        assert!((out.as_slice()[0] - 3.0).abs() < 1e-15);
        assert!((out.as_slice()[1] - 4.0).abs() < 1e-15);
        assert_eq!(block_soft_threshold(&bv(&[0.0, 0.0, 1.0, 0.0], 2), 0.5).as_slice(), &[0.0, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn lambda_formula_values() {
        // Values frozen from a 50-digit mpmath evaluation.
        let l1 = lambda_datapoor(1, 16, 2, 0.05, 1.0).unwrap();
        assert!((l1 - 1.891_377_190_952_886_4).abs() < 1e-12, "{l1}");
        let lr = lambda_datarich(1, 8, 2, 0.5).unwrap();
        assert!((lr - 2.632_768_847_734_159_3).abs() < 1e-12, "{lr}");
        assert_eq!(lambda_datapoor(3, 16, 2, 0.05, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lambda_monotone_and_limits() {
        let a = lambda_datapoor(1, 10, 3, 0.1, 1.0).unwrap();
        let b = lambda_datapoor(2, 10, 3, 0.1, 1.0).unwrap();
        assert!(b < a);
        assert!(lambda_datarich(1, 1_000_000, 2, 0.1).unwrap() < lambda_datarich(1, 100, 2, 0.1).unwrap());
        assert!(lambda_datarich(1, 1 << 40, 2, 0.1).unwrap() < 1e-4);
    }

    #[test]
    fn lambda_domain_errors() {
        assert!(lambda_datapoor(0, 16, 2, 0.05, 1.0).is_err());
        assert!(lambda_datapoor(1, 0, 2, 0.05, 1.0).is_err());
        assert!(lambda_datapoor(1, 16, 2, 1.0, 1.0).is_err());
        assert!(lambda_datapoor(1, 16, 2, 0.05, -1.0).is_err());
        assert!(lambda_datarich(0, 8, 2, 0.5).is_err());
        assert!(lambda_datarich(1, 8, 2, 0.0).is_err());
    }

    #[test]
    fn nonfinite_input_is_rejected() {
        let a = Matrix::identity(2);
        let y = [1.0, f64::NAN];
        let p = LassoProblem { design: &a, response: &y, lambda: 0.1, block_size: 1, scale: 0.5 };
        assert!(matches!(solve(&p, &LassoOptions::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn identity_design_is_a_single_prox() {
        // With A = I and scale = 1/2 the minimizer is the block soft threshold of y.
        let a = Matrix::identity(4);
        let y = [6.0, 8.0, 0.3, 0.4];
        let p = LassoProblem { design: &a, response: &y, lambda: 5.0, block_size: 2, scale: 0.5 };
        let opts = LassoOptions { tol: 1e-14, ..Default::default() };
        let sol = solve(&p, &opts).unwrap();
        assert!(sol.converged);
        let s = sol.phi_hat.as_slice();
        assert!((s[0] - 3.0).abs() < 1e-6 && (s[1] - 4.0).abs() < 1e-6, "{s:?}");
        assert_eq!(&s[2..], &[0.0, 0.0]);
        assert!((sol.objective - p.objective(&sol.phi_hat)).abs() < 1e-10);
    }

    #[test]
    fn zero_design_gives_zero() {
        let a = Matrix::zeros(3, 4);
        let y = [1.0, 2.0, 3.0];
        let p = LassoProblem { design: &a, response: &y, lambda: 0.1, block_size: 2, scale: 1.0 };
        let sol = solve(&p, &LassoOptions::default()).unwrap();
        assert_eq!(sol.phi_hat.norm21(), 0.0);
        assert!((sol.objective - 14.0).abs() < 1e-12);
    }
}
