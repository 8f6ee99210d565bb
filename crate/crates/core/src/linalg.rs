//! Dense linear algebra used throughout the crate.
//!
//! Everything here is deliberately small: the problem sizes we care about are
//! a few hundred rows by a few thousand columns at most, so a row-major
//! `Vec<f64>` with hand-written kernels is enough. The one structured object is
//! the block-Toeplitz design built from a stream of chosen contexts, which has
//! both a dense and an implicit (matrix-free) form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Scales `v` to unit length in place and returns the original norm.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Sine of the angle between the lines spanned by `a` and `b`.
///
/// Returns 1 when either vector is zero (no directional information).
pub fn sin_angle(a: &[f64], b: &[f64]) -> f64 {
    let na = norm2(a);
    let nb = norm2(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let c = (dot(a, b) / (na * nb)).clamp(-1.0, 1.0);
    (1.0 - c * c).max(0.0).sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    axpy(a, other.row(k), out.row_mut(i));
                }
            }
        }
        out
    }

    /// `AᵀA` (cols × cols).
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..n {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let grow = &mut g.data[a * n..(a + 1) * n];
                for b in a..n {
                    grow[b] += ra * r[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g.data[a * n + b] = g.data[b * n + a];
            }
        }
        g
    }

    /// `AAᵀ` (rows × rows).
    pub fn outer_gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = dot(self.row(a), self.row(b));
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: sub(&self.data, &other.data),
        }
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Anything that can be applied forward and adjointly; lets the Lasso solver
/// run on either a dense matrix or the implicit Toeplitz design.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64>;
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.t_matvec(y)
    }
}

/// A vector partitioned into consecutive blocks of `block_size` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    data: Vec<f64>,
    block_size: usize,
}

impl BlockVector {
    pub fn new(data: Vec<f64>, block_size: usize) -> Result<Self> {
        if block_size == 0 || data.len() % block_size != 0 {
            return Err(Error::DimensionMismatch {
                what: "block vector length (multiple of block size)",
                expected: block_size.max(1) * (data.len() / block_size.max(1)),
                found: data.len(),
            });
        }
        Ok(Self { data, block_size })
    }

    pub fn zeros(n_blocks: usize, block_size: usize) -> Self {
        Self {
            data: vec![0.0; n_blocks * block_size],
            block_size,
        }
    }

    /// `w ⊗ θ`: block `k` is `w[k] * θ`.
    pub fn kron(w: &[f64], theta: &[f64]) -> Self {
        let mut data = Vec::with_capacity(w.len() * theta.len());
        for &wk in w {
            data.extend(theta.iter().map(|t| wk * t));
        }
        Self {
            data,
            block_size: theta.len(),
        }
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_blocks(&self) -> usize {
        self.data.len() / self.block_size
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.block_size..(i + 1) * self.block_size]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.block_size..(i + 1) * self.block_size]
    }

    pub fn block_norms(&self) -> Vec<f64> {
        (0..self.n_blocks()).map(|i| norm2(self.block(i))).collect()
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    /// ℓ2,1 norm: sum of per-block Euclidean norms.
    pub fn norm21(&self) -> f64 {
        self.block_norms().iter().sum()
    }

    /// ℓ2,∞ norm: largest per-block Euclidean norm.
    pub fn norm2inf(&self) -> f64 {
        self.block_norms().into_iter().fold(0.0, f64::max)
    }

    /// ℓ2,0 "norm": number of nonzero blocks.
    pub fn norm20(&self) -> usize {
        self.support().len()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_blocks())
            .filter(|&i| self.block(i).iter().any(|&x| x != 0.0))
            .collect()
    }

    /// Copy of the first `n_blocks` blocks, zero-padded when growing.
    pub fn resized(&self, n_blocks: usize) -> BlockVector {
        let mut data = vec![0.0; n_blocks * self.block_size];
        let keep = data.len().min(self.data.len());
        data[..keep].copy_from_slice(&self.data[..keep]);
        BlockVector {
            data,
            block_size: self.block_size,
        }
    }
}

/// Reshapes a block vector into a `block_size × n_blocks` matrix whose i-th
/// column is the i-th block.
pub fn matricize(phi: &BlockVector) -> Matrix {
    let d = phi.block_size();
    Matrix::from_fn(d, phi.n_blocks(), |i, j| phi.block(j)[i])
}

/// Inverse of [`matricize`]: stacks the columns of `m`.
pub fn vectorize(m: &Matrix) -> BlockVector {
    let t = m.transpose();
    BlockVector {
        data: t.as_slice().to_vec(),
        block_size: m.rows(),
    }
}

/// Top singular triplet `M ≈ sigma · left · rightᵀ` with unit `left` and `right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank1Factorization {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// Leading singular triplet by power iteration on `M Mᵀ`.
///
/// The row dimension is assumed small (it is the context dimension `d` in
/// every caller). The left vector is normalized so its first nonzero entry is
/// positive, which makes the result deterministic.
pub fn top_singular_triplet(m: &Matrix, tol: f64, max_iter: usize) -> Result<Rank1Factorization> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("top_singular_triplet"));
    }
    if m.rows() == 0 || m.cols() == 0 || m.is_zero() {
        return Err(Error::DegenerateMatrix);
    }
    let g = m.outer_gram();
    let n = g.rows();
    let start = (0..n)
        .max_by(|&a, &b| g[(a, a)].total_cmp(&g[(b, b)]))
        .expect("nonempty");
    let mut u = g.column(start);
    if normalize(&mut u) == 0.0 {
        return Err(Error::DegenerateMatrix);
    }

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let z = g.matvec(&u);
        let lambda = dot(&u, &z);
        if !(lambda > 0.0) {
            return Err(Error::DegenerateMatrix);
        }
        let residual: f64 = z
            .iter()
            .zip(&u)
            .map(|(zi, ui)| (zi - lambda * ui).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * lambda {
            converged = true;
            break;
        }
        u = z;
        normalize(&mut u);
    }

    let triplet = finish_triplet(m, u);
    if converged {
        Ok(triplet)
    } else {
        Err(Error::NotConverged {
            iterations,
            last: Box::new(triplet),
        })
    }
}

fn finish_triplet(m: &Matrix, mut u: Vec<f64>) -> Rank1Factorization {
    let scale = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(first) = u.iter().find(|x| x.abs() > 1e-12 * scale).copied() {
        if first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let mut v = m.t_matvec(&u);
    let sigma = normalize(&mut v);
    Rank1Factorization {
        left: u,
        right: v,
        sigma,
    }
}

/// Like [`top_singular_triplet`] but falls back to the last iterate when the
/// iteration runs out of steps (the direction is still informative when the top
/// singular values are nearly tied).
pub fn top_singular_triplet_lenient(m: &Matrix, opts: PowerIterOptions) -> Result<Rank1Factorization> {
    match top_singular_triplet(m, opts.tol, opts.max_iter) {
        Err(Error::NotConverged { last, .. }) => Ok(*last),
        other => other,
    }
}

/// Largest singular value (operator norm).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    // σ₁ is shared by M and Mᵀ; iterate on the smaller Gram matrix.
    let small = if m.rows() <= m.cols() { m.clone() } else { m.transpose() };
    match top_singular_triplet_lenient(&small, PowerIterOptions { tol: 1e-12, max_iter: 5000 }) {
        Ok(t) => t.sigma,
        Err(_) => 0.0,
    }
}

/// Largest eigenvalue of `AᵀA` for an arbitrary operator, by power iteration.
pub fn operator_norm_sq(op: &dyn LinearOperator, tol: f64, max_iter: usize) -> f64 {
    let n = op.ncols();
    if n == 0 || op.nrows() == 0 {
        return 0.0;
    }
    // Deterministic, non-symmetric start vector.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618_033_988_75).fract()).collect();
    normalize(&mut x);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let z = op.apply_adjoint(&op.apply(&x));
        let next = dot(&x, &z);
        let nz = norm2(&z);
        if nz == 0.0 {
            return 0.0;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return next.max(nz);
        }
        lambda = next;
    }
    lambda
}

/// Extreme eigenvalues `(min, max)` of a symmetric positive semidefinite
/// matrix, by power iteration on the matrix and on its shift `max·I − G`.
pub fn psd_extreme_eigenvalues(g: &Matrix, tol: f64, max_iter: usize) -> (f64, f64) {
    let n = g.rows();
    if n == 0 {
        return (0.0, 0.0);
    }
    let power = |apply: &dyn Fn(&[f64]) -> Vec<f64>| -> f64 {
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.754_877_666).fract()).collect();
        normalize(&mut x);
        let mut lambda = 0.0;
        for _ in 0..max_iter {
            let z = apply(&x);
            let next = dot(&x, &z);
            let nz = norm2(&z);
            if nz == 0.0 {
                return 0.0;
            }
            x = z.into_iter().map(|v| v / nz).collect();
            if (next - lambda).abs() <= tol * next.abs().max(1e-300) {
                return next;
            }
            lambda = next;
        }
        lambda
    };
    let max = power(&|x| g.matvec(x));
    let shifted = power(&|x| {
        let gx = g.matvec(x);
        x.iter().zip(gx).map(|(xi, gi)| max * xi - gi).collect()
    });
    ((max - shifted).max(0.0), max)
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
/// Returns `None` when a pivot is not safely positive.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let floor = 1e-13 * max_diag.max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > floor) {
            return None;
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[(i, k)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[(k, i)] * z[k];
        }
        z[i] /= l[(i, i)];
    }
    Some(z)
}

/// Least squares `argmin ‖A x − y‖²` through the normal equations, adding a
/// ridge penalty of `ridge_fallback` if `AᵀA` is singular.
pub fn least_squares(a: &Matrix, y: &[f64], ridge_fallback: f64) -> Vec<f64> {
    let mut g = a.gram();
    let rhs = a.t_matvec(y);
    if let Some(x) = solve_spd(&g, &rhs) {
        return x;
    }
    ridge_solve(&mut g, &rhs, ridge_fallback)
}

fn ridge_solve(g: &mut Matrix, rhs: &[f64], ridge: f64) -> Vec<f64> {
    let n = g.rows();
    let mut penalty = ridge.max(f64::MIN_POSITIVE);
    loop {
        let mut gr = g.clone();
        for i in 0..n {
            gr[(i, i)] += penalty;
        }
        if let Some(x) = solve_spd(&gr, rhs) {
            return x;
        }
        penalty *= 10.0;
        if !penalty.is_finite() {
            return vec![0.0; n];
        }
    }
}

/// Chosen context at (1-based) time `t`, or `None` for `t ≤ 0`.
#[inline]
fn context_at(contexts: &[Vec<f64>], t: isize) -> Option<&[f64]> {
    if t <= 0 {
        None
    } else {
        contexts.get(t as usize - 1).map(Vec::as_slice)
    }
}

/// Implicit block-Toeplitz design over a stream of chosen contexts.
///
/// Row `r` has block `k` equal to `ξ_{plus[r] − k}` (minus `ξ_{minus[r] − k}`
/// when a difference system is requested); contexts at times `≤ 0` are zero.
/// `contexts[t − 1]` holds `ξ_t`.
#[derive(Debug, Clone)]
pub struct ToeplitzOperator<'a> {
    contexts: &'a [Vec<f64>],
    plus: Vec<usize>,
    minus: Option<Vec<usize>>,
    n_blocks: usize,
    block_size: usize,
}

impl<'a> ToeplitzOperator<'a> {
    pub fn new(contexts: &'a [Vec<f64>], row_times: Vec<usize>, n_blocks: usize, block_size: usize) -> Result<Self> {
        Self::check(contexts, &row_times, block_size)?;
        Ok(Self {
            contexts,
            plus: row_times,
            minus: None,
            n_blocks,
            block_size,
        })
    }

    /// Rows are `Ξ(plus) − Ξ(minus)`.
    pub fn difference(
        contexts: &'a [Vec<f64>],
        plus: Vec<usize>,
        minus: Vec<usize>,
        n_blocks: usize,
        block_size: usize,
    ) -> Result<Self> {
        if plus.len() != minus.len() {
            return Err(Error::DimensionMismatch {
                what: "difference system rows",
                expected: plus.len(),
                found: minus.len(),
            });
        }
        Self::check(contexts, &plus, block_size)?;
        Self::check(contexts, &minus, block_size)?;
        Ok(Self {
            contexts,
            plus,
            minus: Some(minus),
            n_blocks,
            block_size,
        })
    }

    fn check(contexts: &[Vec<f64>], times: &[usize], block_size: usize) -> Result<()> {
        if let Some(c) = contexts.iter().find(|c| c.len() != block_size) {
            return Err(Error::DimensionMismatch {
                what: "context dimension vs block size",
                expected: block_size,
                found: c.len(),
            });
        }
        if let Some(&t) = times.iter().max() {
            if t > contexts.len() {
                return Err(Error::InsufficientHistory {
                    needed: t,
                    available: contexts.len(),
                });
            }
        }
        Ok(())
    }

    fn row_into(&self, t: usize, sign: f64, out: &mut [f64]) {
        let d = self.block_size;
        for k in 0..self.n_blocks {
            if let Some(x) = context_at(self.contexts, t as isize - k as isize) {
                axpy(sign, x, &mut out[k * d..(k + 1) * d]);
            } else {
                break;
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let cols = self.n_blocks * self.block_size;
        let mut m = Matrix::zeros(self.plus.len(), cols);
        for r in 0..self.plus.len() {
            let row = m.row_mut(r);
            self.row_into(self.plus[r], 1.0, row);
            if let Some(minus) = &self.minus {
                self.row_into(minus[r], -1.0, row);
            }
        }
        m
    }

    /// Dense when a row has at most 10⁴ entries, implicit otherwise.
    pub fn materialize(self) -> DesignOperator<'a> {
        if self.n_blocks * self.block_size <= 10_000 {
            DesignOperator::Dense(self.to_dense())
        } else {
            DesignOperator::Implicit(self)
        }
    }

    fn dot_row(&self, t: usize, x: &[f64]) -> f64 {
        let d = self.block_size;
        let mut acc = 0.0;
        for k in 0..self.n_blocks {
            match context_at(self.contexts, t as isize - k as isize) {
                Some(xi) => acc += dot(xi, &x[k * d..(k + 1) * d]),
                None => break,
            }
        }
        acc
    }
}

impl LinearOperator for ToeplitzOperator<'_> {
    fn nrows(&self) -> usize {
        self.plus.len()
    }
    fn ncols(&self) -> usize {
        self.n_blocks * self.block_size
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.plus.len())
            .map(|r| {
                let mut v = self.dot_row(self.plus[r], x);
                if let Some(minus) = &self.minus {
                    v -= self.dot_row(minus[r], x);
                }
                v
            })
            .collect()
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        for (r, &yr) in y.iter().enumerate() {
            self.row_into(self.plus[r], yr, &mut out);
            if let Some(minus) = &self.minus {
                self.row_into(minus[r], -yr, &mut out);
            }
        }
        out
    }
}

/// A design that is either materialized or left implicit.
#[derive(Debug, Clone)]
pub enum DesignOperator<'a> {
    Dense(Matrix),
    Implicit(ToeplitzOperator<'a>),
}

impl DesignOperator<'_> {
    pub fn as_operator(&self) -> &dyn LinearOperator {
        match self {
            DesignOperator::Dense(m) => m,
            DesignOperator::Implicit(t) => t,
        }
    }
}

/// `Ξ φ` restricted to `row_times`, without materializing `Ξ`.
///
/// Entry `r` equals `Σ_i ⟨ξ_{t_r − i}, φ_i⟩` over the blocks of `phi`, with
/// contexts at nonpositive times treated as zero.
pub fn toeplitz_matvec(contexts: &[Vec<f64>], phi: &BlockVector, row_times: &[usize]) -> Result<Vec<f64>> {
    let op = ToeplitzOperator::new(contexts, row_times.to_vec(), phi.n_blocks(), phi.block_size())?;
    Ok(op.apply(phi.as_slice()))
}
