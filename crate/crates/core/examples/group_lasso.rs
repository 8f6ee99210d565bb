//! Block-sparse recovery with the group Lasso.
//!
//! A 3-sparse vector of 20 blocks (d = 4) is measured by a random Gaussian
//! design and recovered from noisy measurements.

use longhorizon::lasso::{solve, LassoOptions, LassoProblem};
use longhorizon::linalg::{norm2, sub, BlockVector, Matrix};
use longhorizon::rng::{stream_rng, Stream};
use rand_distr::{Distribution, StandardNormal};

fn main() -> longhorizon::Result<()> {
    let (d, blocks, m) = (4, 20, 60);
    let mut rng = stream_rng(7, Stream::Measurement, 0);
    let a = Matrix::from_fn(m, d * blocks, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z / (m as f64).sqrt()
    });

    let mut truth = BlockVector::zeros(blocks, d);
    for (b, v) in [(2, [1.0, -0.5, 0.0, 0.3]), (9, [0.0, 0.8, 0.8, 0.0]), (15, [-0.4, 0.0, 0.2, 1.0])] {
        truth.block_mut(b).copy_from_slice(&v);
    }
    let mut y = a.matvec(truth.as_slice());
    for v in &mut y {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += 0.01 * z;
    }

    let mut problem = LassoProblem {
        design: &a,
        response: &y,
        lambda: 0.0,
        block_size: d,
        scale: 0.5,
    };
    println!("lambda_max = {:.4}", problem.lambda_max());
    for lambda in [0.1, 0.02, 0.005] {
        problem.lambda = lambda;
        let sol = solve(&problem, &LassoOptions::default())?;
        let err = norm2(&sub(sol.phi_hat.as_slice(), truth.as_slice()));
        println!(
            "lambda = {lambda:<6} support = {:?} error = {err:.4} iterations = {}",
            sol.phi_hat.support(),
            sol.iterations
        );
    }
    Ok(())
}
