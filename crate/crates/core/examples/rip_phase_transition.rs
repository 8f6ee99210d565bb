//! Rank-1 recovery from iid and block-circulant measurements.
//!
//! A reduced version of the phase-transition sweep: with iid rows the
//! success curve barely depends on the sparsity of w, while circulant rows
//! need more measurements when w is dense. Pass `--full` for the 50-trial
//! figure grid.

use longhorizon::env::ContextDist;
use longhorizon::riplab::{phase_transition_sweep, EnsembleKind, PhaseTransitionConfig};

fn main() -> longhorizon::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let (d, h) = if full { (10, 100) } else { (5, 40) };
    let cfg = PhaseTransitionConfig {
        kinds: vec![EnsembleKind::Iid, EnsembleKind::CirculantBlock],
        d,
        h,
        s_list: vec![1, h / 2, h],
        m_grid: (1..=12).map(|i| i * (d + h) / 4).collect(),
        trials: if full { 50 } else { 10 },
        seed: 1,
        generator_dist: ContextDist::Uniform,
        max_iter: 200,
        tol: 1e-10,
    };
    let rows = phase_transition_sweep(&cfg)?;
    println!("{:<16} {:>4} {}", "ensemble", "s", cfg.m_grid.iter().map(|m| format!("{m:>5}")).collect::<String>());
    for kind in &cfg.kinds {
        for &s in &cfg.s_list {
            let probs: String = rows
                .iter()
                .filter(|r| r.kind == *kind && r.s == s)
                .map(|r| format!("{:>5.2}", r.success_prob))
                .collect();
            println!("{:<16} {s:>4} {probs}", kind.as_str());
        }
    }
    Ok(())
}
