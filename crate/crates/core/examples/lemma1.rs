//! Circulant matrices fail RIP on rank-1 Fourier matrices.
//!
//! `M_p` is the largest deviation `||d_k|² − 1|` of the normalized DFT of a
//! complex Gaussian generator. `M_p > 1` rules out any RIP constant ≤ 1.

use longhorizon::riplab::{fourier_extremum, fourier_extremum_direct, lemma1_closed_form, lemma1_witness};
use num_complex::Complex64;

fn main() -> longhorizon::Result<()> {
    for p in [4, 16, 64, 256] {
        let mc = lemma1_witness(p, 10_000, 5)?;
        println!("p = {p:>3}  Pr[M_p > 1] = {mc:.4}  (closed form {:.4})", lemma1_closed_form(p));
    }
    let ones = vec![Complex64::new(1.0, 0.0); 16];
    println!(
        "all-ones generator, p = 16: M_p = {} (direct {})",
        fourier_extremum(&ones),
        fourier_extremum_direct(&ones)
    );
    Ok(())
}
