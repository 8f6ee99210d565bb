use std::fs;
use std::process::Command;

use longhorizon::agents::{AlgorithmSpec, SwMpParams};
use longhorizon::env::{EnvConfig, WeightPattern};
use longhorizon::harness::{
    aggregate, diagnostic_q, fmt_g12, mean_stderr, run_experiment, AgentEntry, ExperimentSpec, Welford, SCHEMA_VERSION,
};
use longhorizon::Error;
use proptest::prelude::*;

fn spec(dir: &std::path::Path, agents: &[&str]) -> ExperimentSpec {
    ExperimentSpec {
        schema_version: SCHEMA_VERSION,
        name: "t".into(),
        env: EnvConfig {
            d: 3,
            k: 5,
            h: 20,
            s: 3,
            t: 120,
            theta: None,
            w: WeightPattern::Flat,
            noise_std: 0.1,
            context_dist: Default::default(),
            seed: 0,
        },
        agents: agents
            .iter()
            .map(|n| AgentEntry {
                name: n.to_string(),
                algorithm: match *n {
                    "oracle" => AlgorithmSpec::Oracle { label: "oracle".into() },
                    "ucb" => AlgorithmSpec::UcbMp(Default::default()),
                    _ => AlgorithmSpec::SwMp(SwMpParams::default()),
                },
            })
            .collect(),
        trials: 3,
        base_seed: 99,
        output_dir: dir.to_path_buf(),
        our_choices: vec![],
    }
}

fn read(dir: &std::path::Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn oracle_trace_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(dir.path(), &["oracle"]);
    s.trials = 1;
    run_experiment(&s, 1).unwrap();
    let csv = read(dir.path(), "oracle_0000.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,cum_regret"));
    for (i, line) in lines.enumerate() {
        assert_eq!(line, format!("{},0", i + 1));
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&spec(a.path(), &["swmp", "ucb"]), 1).unwrap();
    run_experiment(&spec(b.path(), &["swmp", "ucb"]), 3).unwrap();
    for agent in ["swmp", "ucb"] {
        for t in 0..3 {
            let f = format!("{agent}_{t:04}.csv");
            assert_eq!(read(a.path(), &f), read(b.path(), &f));
            let e = format!("{agent}_{t:04}_epochs.json");
            assert_eq!(read(a.path(), &e), read(b.path(), &e));
        }
        let g = format!("{agent}_agg.csv");
        assert_eq!(read(a.path(), &g), read(b.path(), &g));
    }
}

#[test]
fn adding_an_agent_leaves_others_untouched() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&spec(a.path(), &["swmp"]), 1).unwrap();
    run_experiment(&spec(b.path(), &["ucb", "swmp"]), 1).unwrap();
    assert_eq!(read(a.path(), "swmp_0002.csv"), read(b.path(), "swmp_0002.csv"));
}

#[test]
fn traces_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_experiment(&spec(dir.path(), &["swmp"]), 2).unwrap();
    let mut traces = Vec::new();
    for t in 0..3 {
        let csv = read(dir.path(), &format!("swmp_{t:04}.csv"));
        let rows: Vec<(usize, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), (1..=120).collect::<Vec<_>>());
        assert!(rows.windows(2).all(|p| p[1].1 >= p[0].1));
        traces.push(rows.into_iter().map(|r| r.1).collect::<Vec<f64>>());
    }
    // Aggregate rows agree with a streaming pass over the parsed traces.
    let agg = read(dir.path(), "swmp_agg.csv");
    assert!(agg.starts_with("t,mean,stderr\n"));
    for (i, line) in agg.lines().skip(1).enumerate() {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let mut w = Welford::default();
        traces.iter().for_each(|t| w.push(t[i]));
        assert!((cells[1] - w.mean()).abs() <= 1e-9 * w.mean().abs().max(1.0));
        assert!((cells[2] - w.stderr()).abs() <= 1e-9 * w.stderr().max(1.0));
    }
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "metadata.json")).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["failures"].as_array().unwrap().len(), 0);
    assert_eq!(summary.final_regret.len(), 1);
}

#[test]
fn invalid_specs_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let field = |s: ExperimentSpec| match s.validate() {
        Err(Error::InvalidConfig { field, .. }) => field,
        other => panic!("{other:?}"),
    };
    let mut s = spec(dir.path(), &["swmp"]);
    s.trials = 0;
    assert_eq!(field(s), "trials");
    assert_eq!(field(spec(dir.path(), &["swmp", "swmp"])), "agents[1].name");
    let mut s = spec(dir.path(), &["swmp"]);
    s.env.k = 0;
    assert_eq!(field(s), "env.k");
    let mut s = spec(dir.path(), &["swmp"]);
    s.agents[0].algorithm = AlgorithmSpec::UcbMp(longhorizon::agents::UcbMpParams {
        ridge: -1.0,
        ..Default::default()
    });
    assert!(field(s).starts_with("agents[0].algorithm."));
    let mut s = spec(dir.path(), &["swmp"]);
    s.schema_version = 7;
    assert_eq!(field(s), "schema_version");

    let json = serde_json::to_string(&spec(dir.path(), &["swmp"])).unwrap();
    let typo = json.replacen("\"trials\"", "\"trails\"", 1);
    assert!(ExperimentSpec::from_json(&typo).is_err());
    assert!(ExperimentSpec::from_json(&json).is_ok());
}

#[test]
fn q_diagnostic_examples() {
    let mut e1 = vec![0.0; 50];
    e1[0] = 1.0;
    let q = diagnostic_q(&e1, 0.5).unwrap();
    assert_eq!((q.q, q.alpha), (1, 0.0));
    let mut eh = vec![0.0; 50];
    eh[49] = 1.0;
    for mu in [0.1, 0.7, 1.0] {
        let q = diagnostic_q(&eh, mu).unwrap();
        assert_eq!(q.q, 50);
        assert!((q.alpha - 1.0).abs() < 1e-12);
    }
    assert!(matches!(diagnostic_q(&e1, 1.5), Err(Error::MassUnreachable { .. })));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_longhorizon"))
}

fn stderr_json(out: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn cli_reports_errors_as_json() {
    let out = bin().args(["preset", "fig9"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "unknown_preset");

    let out = bin().args(["frobnicate"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = bin().args(["q-diagnostic", "/nonexistent.json"]).output().unwrap();
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "io");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut s = spec(dir.path(), &["swmp"]);
    s.trials = 0;
    fs::write(&bad, serde_json::to_string(&s).unwrap()).unwrap();
    let out = bin().arg("run").arg(&bad).output().unwrap();
    let err = stderr_json(&out);
    assert_eq!(err["error"], "invalid_config");
    assert_eq!(err["field"], "trials");

    let out = bin().env("LONGHORIZON_WORKERS", "zero").args(["q-diagnostic", "x"]).output().unwrap();
    assert_eq!(stderr_json(&out)["field"], "LONGHORIZON_WORKERS");
}

#[test]
fn cli_q_diagnostic_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    fs::write(&w, "[0, 0, 0.6, 0.8]").unwrap();
    let out = bin().arg("q-diagnostic").arg(&w).args(["--mu", "0.5"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["q"], 3);

    let path = dir.path().join("spec.json");
    let out_dir = dir.path().join("run");
    fs::write(&path, serde_json::to_string(&spec(&out_dir, &["oracle"])).unwrap()).unwrap();
    let out = bin().env("LONGHORIZON_WORKERS", "2").arg("run").arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("oracle_agg.csv").exists());
}

proptest! {
    #[test]
    fn g12_round_trips(x in prop::num::f64::NORMAL) {
        let s = fmt_g12(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!(((back - x) / x).abs() <= 5e-12, "{x} -> {s}");
        let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 12);
    }

    #[test]
    fn flat_prefix_mass(s in 1usize..40, pad in 0usize..40) {
        let mut w = vec![1.0 / s as f64; s];
        w.extend(std::iter::repeat_n(0.0, pad));
        let norm = (1.0 / s as f64).sqrt();
        let q = diagnostic_q(&w, norm / 2f64.sqrt()).unwrap();
        prop_assert_eq!(q.q, s.div_ceil(2));
    }

    #[test]
    fn stderr_agrees_across_methods(xs in prop::collection::vec(-1e3f64..1e3, 2..30)) {
        let (m, s) = mean_stderr(&xs);
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        prop_assert!((m - w.mean()).abs() <= 1e-9 * m.abs().max(1.0));
        prop_assert!((s - w.stderr()).abs() <= 1e-9 * s.max(1.0));
        let traces: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let refs: Vec<&[f64]> = traces.iter().map(Vec::as_slice).collect();
        prop_assert_eq!(aggregate(&refs)[0], (m, s));
    }
}

#[test]
fn preset_outputs_match_the_published_schema() {
    let schema: serde_json::Value = serde_json::from_str(&fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schemas/outputs.json")).unwrap()).unwrap();
    let header = |key: &str| schema["csv"][key].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect::<Vec<_>>().join(",");
    let dir = tempfile::tempdir().unwrap();
    let mut p = longhorizon::harness::preset("lemma1").unwrap();
    if let Some((_, longhorizon::harness::Job::Lemma1(cfg))) = p.jobs.first_mut() {
        cfg.trials = 50;
    }
    longhorizon::harness::run_preset(&p, dir.path(), 1).unwrap();
    let first = |f: &std::path::Path| fs::read_to_string(f).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first(&dir.path().join("lemma1/lemma1.csv")), header("lemma1.csv"));

    let run = dir.path().join("run");
    run_experiment(&spec(&run, &["swmp"]), 1).unwrap();
    assert_eq!(first(&run.join("swmp_0000.csv")), header("{agent}_{trial:04}.csv"));
    assert_eq!(first(&run.join("swmp_agg.csv")), header("{agent}_agg.csv"));
    let meta: serde_json::Value = serde_json::from_str(&read(&run, "metadata.json")).unwrap();
    for key in schema["json"]["metadata.json"].as_array().unwrap() {
        assert!(meta.get(key.as_str().unwrap()).is_some(), "{key}");
    }
}
