use fwlab::config::{expand_sweep, ExperimentConfig};
use fwlab::output::fmt17;
use fwlab::runner::{run_experiment_with, RunOptions};
use fwlab_core::Execution;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

fn custom_config(dir: &Path) -> String {
    format!(
        r#"preset = "custom"
name = "tiny"
T = 200
rules = ["open-loop-2", "line-search"]
output_dir = "{}"
emit_svg = true

[region]
kind = "lp"
p = 2.0
radius = 1.0
n = 3

[objective]
kind = "quadratic"
y = [0.2, -0.1, 0.3]
"#,
        dir.display()
    )
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(&custom_config(tmp.path())).unwrap();
    let a = run_experiment_with(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(a.report.rules.len(), 2);
    assert!(a.report_path.exists());
    assert!(a.svg_path.as_ref().is_some_and(|p| p.exists()));
    let first: Vec<String> = a.csv_paths.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect();
    let seq = RunOptions {
        exec: Execution::Sequential,
        emit_bounds: false,
    };
    let b = run_experiment_with(&cfg, &seq).unwrap();
    let second: Vec<String> = b.csv_paths.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect();
    assert_eq!(first, second);
    // y lies inside the ball, so the reference is the closed-form interior point
    assert_eq!(a.report.reference.method, "closed-form:interior");
}

#[test]
fn binary_reports_rates_and_rejects_bad_configs() {
    let exe = env!("CARGO_BIN_EXE_fwlab");
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("tiny.toml");
    std::fs::write(&cfg_path, custom_config(tmp.path())).unwrap();
    let out = Command::new(exe).args(["--sequential", "run"]).arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = tmp.path().join("tiny").join("trace_open-loop-2.csv");
    let out = Command::new(exe).arg("rate").arg(&csv).args(["--measure", "gap", "--window", "20,200"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("gap slope"));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "preset = \"strong1\"\np = 0.5\n").unwrap();
    let out = Command::new(exe).arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(exe).arg("run").arg(tmp.path().join("missing.toml")).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() })]

    #[test]
    fn sweep_is_a_cartesian_product(ps in prop::collection::btree_set(11u32..80, 1..4), seeds in prop::collection::btree_set(1u64..50, 1..4)) {
        let ps: Vec<String> = ps.iter().map(|p| format!("{:.1}", *p as f64 / 10.0)).collect();
        let seeds: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
        let text = format!("preset = \"weak\"\np = 2.0\nT = 100\n[sweep]\np = [{}]\nseed = [{}]\n", ps.join(", "), seeds.join(", "));
        let cfgs = expand_sweep(&text).unwrap();
        prop_assert_eq!(cfgs.len(), ps.len() * seeds.len());
        let names: BTreeSet<String> = cfgs.iter().map(|c| c.name()).collect();
        prop_assert_eq!(names.len(), cfgs.len());
    }

    #[test]
    fn csv_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
    }
}
