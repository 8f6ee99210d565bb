//! Runs a named preset: `cargo run --release --example run_preset -- fig4 [out]`.

use std::path::PathBuf;

use longhorizon::harness::{preset, resolve_workers, run_preset, JobOutput, PRESET_NAMES};

fn main() -> longhorizon::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(name) = args.next() else {
        eprintln!("usage: run_preset <{}> [out]", PRESET_NAMES.join("|"));
        std::process::exit(2);
    };
    let out = args.next().map_or_else(|| PathBuf::from("out").join(&name), PathBuf::from);
    let p = preset(&name)?;
    for (label, res) in run_preset(&p, &out, resolve_workers(None)?)? {
        match res {
            JobOutput::Bandit(s) => {
                for (agent, mean, se) in s.final_regret {
                    println!("{label}: {agent} final regret {mean:.1} ± {se:.1}");
                }
            }
            JobOutput::Table(path) => println!("{label}: {}", path.display()),
        }
    }
    Ok(())
}
