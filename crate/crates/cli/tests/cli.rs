use std::fs;
use std::path::Path;
use std::process::Command;

use arrival_cli::config::PacketConfig;
use arrival_cli::{parse_config, run_scenario, Analysis, CliError, RunOptions};
use sha2::{Digest, Sha256};

const MINIMAL: &str = r#"
[[analyses]]
kind = "arrival"
"#;

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out_dir: Some(dir.to_path_buf()), threads: 1, verify_oracles: false }
}

fn problems(text: &str) -> Vec<String> {
    match parse_config(text) {
        Err(CliError::Validation(p)) => p,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn empty_analyses_are_rejected() {
    let p = problems("[packet]\nq0 = 10.0\n");
    assert!(p.iter().any(|m| m.contains("at least one analysis")), "{p:?}");
}

#[test]
fn unnormalized_weights_are_rejected() {
    let p = problems(
        r#"
[[packet.terms]]
weight = 0.6
q0 = 20.0
p0 = -1.0
sigma = 5.0

[[packet.terms]]
weight = 0.6
q0 = 60.0
p0 = -3.0
sigma = 5.0

[[analyses]]
kind = "arrival"
"#,
    );
    assert!(p.iter().any(|m| m.contains("weights sum to 1.2")), "{p:?}");
}

#[test]
fn every_violation_is_listed() {
    let p = problems(
        r#"
[packet]
sigma = -1.0

[grid]
x_min = 5.0

[evolution]
dt = 0.0

[[analyses]]
kind = "pulsed"
epsilon = -1.0

[[analyses]]
kind = "pulsed"
epsilon = 1.0
"#,
    );
    for needle in ["packet[0]", "grid", "evolution", "pulsed.epsilon", "more than once"] {
        assert!(p.iter().any(|m| m.contains(needle)), "{needle} missing from {p:?}");
    }
}

#[test]
fn parse_errors_locate_the_problem() {
    let e = parse_config("[potential]\nv0 = \"strong\"\n").unwrap_err();
    let msg = e.to_string();
    assert!(matches!(e, CliError::Parse(_)));
    assert!(msg.contains("line 2") && msg.contains("v0"), "{msg}");
    let e = parse_config("[potential]\nvo = 0.2\n").unwrap_err();
    assert!(e.to_string().contains("vo"), "{e}");
    let e = parse_config("[[analyses]]\nkind = \"tomography\"\n").unwrap_err();
    assert!(matches!(e, CliError::Parse(_)));
}

#[test]
fn minimal_config_takes_the_standard_defaults() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.packet, PacketConfig::Gaussian { q0: 10.0, p0: -2.0, sigma: 1.0, mass: 1.0 });
    assert_eq!(cfg.potential.v0, 0.2);
    assert_eq!((cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points), (-100.0, 60.0, 4096));
    assert_eq!((cfg.evolution.dt, cfg.evolution.tau), (0.005, 15.0));
    assert_eq!(cfg.analyses, vec![Analysis::Arrival]);

    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, &opts(dir.path())).unwrap();
    let echoed: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(echoed["config"]["packet"]["q0"], 10.0);
    assert_eq!(echoed["config"]["evolution"]["tau"], 15.0);
    assert_eq!(report.config, cfg);
}

#[test]
fn arrival_analysis_writes_series_and_checks_the_convolution_law() {
    let cfg = parse_config(MINIMAL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, &opts(dir.path())).unwrap();
    assert!(report.pass, "{report:#?}");
    let a = &report.analyses[0];
    assert_eq!(a.files, ["N.csv", "Pi.csv", "J.csv", "RconvJ.csv"]);
    let conv = a.assertions.iter().find(|c| c.name.contains("R∗J")).unwrap();
    assert!(conv.pass && conv.threshold == 0.03 && conv.measured < 0.03);

    let text = fs::read_to_string(dir.path().join("Pi.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,t,value"));
    assert_eq!(lines.clone().count(), 3001);
    assert!(lines.next().unwrap().starts_with("Pi,0,"));

    for entry in &report.manifest {
        let bytes = fs::read(dir.path().join(&entry.file)).unwrap();
        let sum: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(sum, entry.sha256, "{}", entry.file);
        assert_eq!(bytes.len(), entry.bytes);
    }
    let listed: Vec<&str> = report.manifest.iter().map(|m| m.file.as_str()).collect();
    assert_eq!(listed, ["N.csv", "Pi.csv", "J.csv", "RconvJ.csv"]);
}

#[test]
fn histories_analysis_records_structural_assertions() {
    let cfg = parse_config("[[analyses]]\nkind = \"histories\"\nintervals = 3\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, &opts(dir.path())).unwrap();
    let a = &report.analyses[0];
    assert!(a.pass(), "{a:#?}");
    let names: Vec<&str> = a.assertions.iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains(&"Hermiticity defect") && names.contains(&"|Σ D − 1|"), "{names:?}");

    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("decoherence_matrix.json")).unwrap()).unwrap();
    let entries = m["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert_eq!(m["labels"][3], "nc");
    let mut total = 0.0;
    for (a, row) in entries.iter().enumerate() {
        for (b, z) in row.as_array().unwrap().iter().enumerate() {
            let z = z.as_array().unwrap();
            let w = entries[b][a].as_array().unwrap();
            assert_eq!(z[0], w[0]);
            assert_eq!(z[1].as_f64().unwrap(), -w[1].as_f64().unwrap());
            total += z[0].as_f64().unwrap();
        }
    }
    assert!((total - 1.0).abs() < 1e-3, "{total}");
}

#[test]
fn runs_are_byte_identical_across_repeats_and_thread_counts() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/standard_packet.toml")).unwrap();
    let cfg = parse_config(&text).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&cfg, &opts(a.path())).unwrap();
    run_scenario(&cfg, &RunOptions { threads: 4, ..opts(b.path()) }).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 9, "{names:?}");
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn analyses_fail_independently() {
    // ε = 0.7 does not divide τ = 15.
    let cfg = parse_config(
        r#"
[[analyses]]
kind = "pulsed"
epsilon = 0.7

[[analyses]]
kind = "backflow"
t1 = 3.0
t2 = 7.0
"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, &RunOptions { threads: 2, ..opts(dir.path()) }).unwrap();
    assert!(!report.pass);
    assert!(report.analyses[0].error.is_some());
    assert!(report.analyses[1].pass(), "{:#?}", report.analyses[1]);
    assert!(dir.path().join("intJ.csv").exists() && dir.path().join("report.json").exists());
}

#[test]
fn superpositions_are_accepted_where_meaningful() {
    let text = r#"
[grid]
x_min = -150.0
x_max = 150.0
n_points = 8192

[evolution]
tau = 25.0

[[packet.terms]]
weight = 0.7
q0 = 20.0
p0 = -1.0
sigma = 5.0

[[packet.terms]]
weight = 0.3
q0 = 60.0
p0 = -3.0
sigma = 5.0

[[analyses]]
kind = "backflow"
t1 = 19.5
t2 = 19.76
"#;
    let cfg = parse_config(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, &opts(dir.path())).unwrap();
    let a = &report.analyses[0];
    assert!(a.pass(), "{a:#?}");
    assert_eq!(a.summary["backflow"], 1.0);
    assert!(a.summary["q_cross"] < 0.0);

    let bad = format!("{text}\n[[analyses]]\nkind = \"classical\"\n");
    assert!(problems(&bad).iter().any(|m| m.contains("single Gaussian")));
}

#[test]
fn binary_runs_scenarios_and_the_selftest() {
    let exe = env!("CARGO_BIN_EXE_arrival");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/standard_packet.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(exe)
        .args(["run", config, "--out"])
        .arg(dir.path())
        .args(["--threads", "2", "--verify-oracles"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("report.json").exists());

    let out = Command::new(exe).args(["selftest", "--only", "3,4"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS criterion 3") && text.contains("PASS criterion 4"), "{text}");

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[packet]\nq0 = 1.0\n").unwrap();
    let out = Command::new(exe).arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least one analysis"));
}
