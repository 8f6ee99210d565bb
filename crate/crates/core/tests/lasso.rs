mod common;

use common::{restricted_least_squares, SplitMix};
use longhorizon::lasso::{block_soft_threshold, lambda_datapoor, lambda_datarich, solve, LassoOptions, LassoProblem};
use longhorizon::linalg::{BlockVector, Matrix};
use longhorizon::Error;
use proptest::prelude::*;

fn objective(a: &Matrix, y: &[f64], phi: &[f64], lambda: f64, d: usize, scale: f64) -> f64 {
    let r = a.matvec(phi);
    let fit: f64 = r.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum();
    let pen: f64 = phi.chunks(d).map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt()).sum();
    scale * fit + lambda * pen
}

/// Golden-section minimum of `t ↦ ½(t − ‖v‖)² + τ|t|` over `t ≥ 0`.
fn golden_shrink(vnorm: f64, tau: f64) -> f64 {
    let f = |t: f64| 0.5 * (t - vnorm).powi(2) + tau * t;
    let (mut lo, mut hi) = (0.0, vnorm.max(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    (lo + hi) / 2.0
}

#[test]
fn prox_example_and_golden_section() {
    let v = BlockVector::new(vec![6.0, 8.0, 0.3, 0.4], 2).unwrap();
    let out = block_soft_threshold(&v, 5.0);
    assert!((out.block(0)[0] - 3.0).abs() < 1e-12 && (out.block(0)[1] - 4.0).abs() < 1e-12);
    assert_eq!(out.block(1), &[0.0, 0.0]);
    for (vn, tau) in [(10.0, 5.0), (1.0, 0.25), (2.0, 3.0)] {
        let v = BlockVector::new(vec![vn * 0.6, vn * 0.8], 2).unwrap();
        let got = block_soft_threshold(&v, tau).norm2();
        assert!((got - golden_shrink(vn, tau)).abs() < 1e-6);
    }
    // A block whose norm equals tau is zeroed.
    let edge = BlockVector::new(vec![3.0, 4.0], 2).unwrap();
    assert_eq!(block_soft_threshold(&edge, 5.0).as_slice(), &[0.0, 0.0]);
}

#[test]
fn lambda_formulas() {
    let v = lambda_datapoor(1, 16, 2, 0.05, 1.0).unwrap();
    assert!((v - 2.0 * (2.0 * (64.0f64 / 0.05).ln() / 16.0).sqrt()).abs() < 1e-12);
    assert!((v - 1.8916).abs() < 5e-4);
    assert_eq!(lambda_datapoor(1, 16, 2, 0.05, 0.0).unwrap(), 0.0);
    assert!(lambda_datapoor(2, 16, 2, 0.05, 1.0).unwrap() < v);
    let r = lambda_datarich(1, 8, 2, 0.5).unwrap();
    assert!((r - 2.0 * (4.0 * 32f64.ln() / 8.0).sqrt()).abs() < 1e-12);
    assert!((r - 2.633).abs() < 1e-3);
    assert!(lambda_datapoor(0, 16, 2, 0.05, 1.0).is_err());
    assert!(lambda_datarich(1, 8, 2, 1.0).is_err());
    assert!(lambda_datarich(1, 1_000_000, 2, 0.5).unwrap() < lambda_datarich(1, 1000, 2, 0.5).unwrap());
}

#[test]
fn vanishing_penalty_gives_least_squares() {
    let (m, d, n) = (30, 2, 4);
    let a = SplitMix(1).matrix(m, n * d);
    let truth: Vec<f64> = (0..n * d).map(|i| (i as f64 - 3.0) / 4.0).collect();
    let y = common::matvec(&a, &truth);
    let want = restricted_least_squares(&a, &y, d, &[0, 1, 2, 3]).unwrap();
    let am = Matrix::from_rows(&a).unwrap();
    let problem = LassoProblem {
        design: &am,
        response: &y,
        lambda: 1e-12,
        block_size: d,
        scale: 0.5 / m as f64,
    };
    let sol = solve(&problem, &LassoOptions { tol: 1e-14, max_iter: 50_000, warm_start: None }).unwrap();
    assert!(common::dist(sol.phi_hat.as_slice(), &want) < 1e-5);
}

#[test]
fn zero_solution_above_lambda_max() {
    let (m, d, n) = (20, 3, 5);
    let mut rng = SplitMix(2);
    let a = Matrix::from_rows(&rng.matrix(m, n * d)).unwrap();
    let y: Vec<f64> = (0..m).map(|_| rng.gaussian()).collect();
    let scale = 0.5 / m as f64;
    let mut problem = LassoProblem {
        design: &a,
        response: &y,
        lambda: 0.0,
        block_size: d,
        scale,
    };
    problem.lambda = problem.lambda_max();
    let sol = solve(&problem, &LassoOptions::default()).unwrap();
    assert_eq!(sol.phi_hat.norm20(), 0);
    let zero = vec![0.0; n * d];
    let f0 = objective(&a, &y, &zero, problem.lambda, d, scale);
    for _ in 0..100 {
        let p: Vec<f64> = (0..n * d).map(|_| 1e-3 * rng.gaussian()).collect();
        assert!(f0 <= objective(&a, &y, &p, problem.lambda, d, scale) + 1e-15);
    }
}

#[test]
fn non_finite_input_is_rejected() {
    let a = Matrix::identity(2);
    let y = [1.0, f64::NAN];
    let problem = LassoProblem {
        design: &a,
        response: &y,
        lambda: 0.1,
        block_size: 1,
        scale: 0.5,
    };
    assert!(matches!(solve(&problem, &LassoOptions::default()), Err(Error::NonFinite(_))));
}

#[test]
fn one_block_sparse_recovery_with_sign_design() {
    // m = 8d rows of a ±1 design, noiseless, printed regularizer.
    for seed in 0..10u64 {
        let (d, n) = (3, 6);
        let m = 8 * d;
        let mut rng = SplitMix(seed);
        let a: common::Dense = (0..m).map(|_| (0..n * d).map(|_| rng.next_f64().signum()).collect()).collect();
        let mut truth = vec![0.0; n * d];
        let block = (seed as usize) % n;
        for j in 0..d {
            truth[block * d + j] = 1.0 + j as f64;
        }
        let y = common::matvec(&a, &truth);
        let (support, oracle) = common::exhaustive_support(&a, &y, d, 1e-10).unwrap();
        assert_eq!(support, vec![block]);
        let am = Matrix::from_rows(&a).unwrap();
        let kappa = min_eig_over_m(&am);
        let lambda = 1e-4 * kappa / 3.0;
        let problem = LassoProblem {
            design: &am,
            response: &y,
            lambda,
            block_size: d,
            scale: 0.5 / m as f64,
        };
        let sol = solve(&problem, &LassoOptions { tol: 1e-14, max_iter: 100_000, warm_start: None }).unwrap();
        assert_eq!(sol.phi_hat.support(), support);
        assert!(common::dist(sol.phi_hat.as_slice(), &oracle) <= 1e-3);
    }
}

/// `λ_min(AᵀA / m)` through the Jacobi oracle.
pub fn min_eig_over_m(a: &Matrix) -> f64 {
    let rows: common::Dense = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
    let svd = common::jacobi_svd(&rows);
    svd.sigma.last().unwrap().powi(2) / a.rows() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kkt_holds_on_zero_blocks(seed in any::<u64>(), d in 1usize..4, n in 2usize..7, lam_frac in 0.05f64..0.9) {
        let m = 15;
        let mut rng = SplitMix(seed);
        let a = Matrix::from_rows(&rng.matrix(m, n * d)).unwrap();
        let y: Vec<f64> = (0..m).map(|_| rng.gaussian()).collect();
        let tol = 1e-10;
        let mut problem = LassoProblem { design: &a, response: &y, lambda: 0.0, block_size: d, scale: 0.5 / m as f64 };
        problem.lambda = lam_frac * problem.lambda_max();
        let sol = solve(&problem, &LassoOptions { tol, max_iter: 50_000, warm_start: None }).unwrap();
        prop_assume!(sol.converged);
        let r: Vec<f64> = a.matvec(sol.phi_hat.as_slice()).iter().zip(&y).map(|(p, q)| p - q).collect();
        let g = a.t_matvec(&r);
        for b in 0..n {
            let gn = g[b * d..(b + 1) * d].iter().map(|x| x * x).sum::<f64>().sqrt() * 2.0 * problem.scale;
            let blk = sol.phi_hat.block(b);
            if blk.iter().all(|x| *x == 0.0) {
                prop_assert!(gn <= problem.lambda + 10.0 * tol, "block {b}: {gn} > {}", problem.lambda);
            } else {
                // Active blocks: the gradient balances the penalty exactly.
                prop_assert!((gn - problem.lambda).abs() <= 1e-3 * problem.lambda.max(1e-3));
            }
        }
    }
}
