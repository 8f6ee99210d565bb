//! How early the weight vector accumulates its mass.

use longhorizon::harness::{diagnostic_q, prefix_norms};
use longhorizon::harness::fig4_weights;

fn main() -> longhorizon::Result<()> {
    let (early, late) = fig4_weights(1000);
    for (name, w) in [("w1", &early), ("w2", &late)] {
        let norm = prefix_norms(w).last().copied().unwrap_or(0.0);
        let q = diagnostic_q(w, norm / 2.0)?;
        println!("{name}: ||w||_2 = {norm:.4}, q = {} (alpha = {:.3}) at mu = {:.4}", q.q, q.alpha, q.mu);
    }
    match diagnostic_q(&early, 0.5) {
        Ok(q) => println!("mu = 0.5: q = {}", q.q),
        Err(e) => println!("mu = 0.5: {e}"),
    }
    Ok(())
}
