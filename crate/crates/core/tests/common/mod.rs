//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's numerical routines.

#![allow(dead_code)]

pub type Dense = Vec<Vec<f64>>;

pub fn transpose(a: &Dense) -> Dense {
    let (m, n) = (a.len(), a.first().map_or(0, Vec::len));
    (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect()
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `|sin|` of the angle between two nonzero vectors.
pub fn sin_between(a: &[f64], b: &[f64]) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (norm(a) * norm(b));
    (1.0 - c.clamp(-1.0, 1.0).powi(2)).max(0.0).sqrt()
}

pub struct Svd {
    /// Descending.
    pub sigma: Vec<f64>,
    /// `u[k]` is the k-th left singular vector.
    pub u: Dense,
    pub v: Dense,
}

/// One-sided Jacobi SVD of an `m × n` matrix.
pub fn jacobi_svd(a: &Dense) -> Svd {
    let n = a.first().map_or(0, Vec::len);
    let mut cols = transpose(a);
    let mut v: Dense = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-300 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..cols[p].len() {
                    let (x, y) = (cols[p][k], cols[q][k]);
                    cols[p][k] = c * x - s * y;
                    cols[q][k] = s * x + c * y;
                }
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    idx.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let vt = transpose(&v);
    Svd {
        sigma: idx.iter().map(|&i| sig[i]).collect(),
        u: idx
            .iter()
            .map(|&i| cols[i].iter().map(|x| if sig[i] > 0.0 { x / sig[i] } else { 0.0 }).collect())
            .collect(),
        v: idx.iter().map(|&i| vt[i].clone()).collect(),
    }
}

/// Solves `M x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut m: Dense, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-13 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

/// Least squares on the columns of `a` belonging to `blocks`, via the
/// normal equations. Returns the full-length coefficient vector.
pub fn restricted_least_squares(a: &Dense, y: &[f64], d: usize, blocks: &[usize]) -> Option<Vec<f64>> {
    let n = a[0].len();
    let cols: Vec<usize> = blocks.iter().flat_map(|&b| b * d..(b + 1) * d).collect();
    let k = cols.len();
    let mut g = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for row in a.iter().zip(y) {
        let (r, yi) = row;
        for (i, &ci) in cols.iter().enumerate() {
            rhs[i] += r[ci] * yi;
            for (j, &cj) in cols.iter().enumerate() {
                g[i][j] += r[ci] * r[cj];
            }
        }
    }
    let sol = gauss_solve(g, rhs)?;
    let mut full = vec![0.0; n];
    for (i, &c) in cols.iter().enumerate() {
        full[c] = sol[i];
    }
    Some(full)
}

/// The smallest block support whose least-squares fit reproduces `y`
/// (relative residual ≤ `tol`), found by trying every subset.
pub fn exhaustive_support(a: &Dense, y: &[f64], d: usize, tol: f64) -> Option<(Vec<usize>, Vec<f64>)> {
    let n_blocks = a[0].len() / d;
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    let yn = norm(y).max(1e-300);
    for mask in 0u32..(1 << n_blocks) {
        let blocks: Vec<usize> = (0..n_blocks).filter(|b| mask >> b & 1 == 1).collect();
        if best.as_ref().is_some_and(|(s, _)| s.len() <= blocks.len()) {
            continue;
        }
        let x = if blocks.is_empty() { vec![0.0; n_blocks * d] } else { restricted_least_squares(a, y, d, &blocks)? };
        let r = matvec(a, &x);
        if dist(&r, y) <= tol * yn {
            best = Some((blocks, x));
        }
    }
    best
}

/// `Ξ` restricted to `times`: row for round `t` holds `ξ_{t−k}` in block `k`
/// (zero when `t − k ≤ 0`). `contexts[t − 1]` is `ξ_t`.
pub fn dense_xi(contexts: &[Vec<f64>], times: &[usize], n_blocks: usize, d: usize) -> Dense {
    times
        .iter()
        .map(|&t| {
            let mut row = vec![0.0; n_blocks * d];
            for k in 0..n_blocks {
                if t > k {
                    row[k * d..(k + 1) * d].copy_from_slice(&contexts[t - k - 1]);
                }
            }
            row
        })
        .collect()
}

/// Splitmix-driven uniform numbers in `[-1, 1)` for oracle-side randomness.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = (self.next_f64() + 1.0) / 2.0;
        let u2 = (self.next_f64() + 1.0) / 2.0;
        (-2.0 * u1.max(1e-300).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn matrix(&mut self, m: usize, n: usize) -> Dense {
        (0..m).map(|_| (0..n).map(|_| self.gaussian()).collect()).collect()
    }
}
