use std::path::PathBuf;
use std::process::Command as Process;

use rockland_cli::commands::{run_command, Command, Flags};

fn model(name: &str) -> String {
    std::fs::read_to_string(model_path(name)).unwrap()
}

fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.rock"))
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_rockland"))
}

#[test]
fn analyze_reports_dimensions() {
    let out = run_command(Command::Analyze, &model("chain_r5_quartic"), &Flags::default()).unwrap();
    let d = out.report.dimensions.as_ref().unwrap();
    assert_eq!(d["q"], 15);
    assert_eq!(d["big_n"], 6);
    assert_eq!(d["step"], 5);
    assert_eq!(d["operator_degree"], 4);
    assert!(out.success());

    // (k, h) = (2, 1): ν₂ = h and q = k + h + 1.
    let out = run_command(Command::Analyze, &model("nonflat_plane_k2_h1"), &Flags::default()).unwrap();
    let d = out.report.dimensions.as_ref().unwrap();
    assert_eq!(d["degrees"], serde_json::json!([1, 1]));
    assert_eq!(d["q"], 4);
}

#[test]
fn gamma_refuses_operator_degree_at_least_q() {
    for k in [1, 2] {
        let err = run_command(Command::Gamma, &model(&format!("power_plane_quartic_k{k}")), &Flags::default())
            .err()
            .expect("refusal");
        let msg = format!("{err:#}");
        assert!(msg.contains("nu < q"), "{msg}");
    }
}

#[test]
fn lift_and_heat_on_grushin_models() {
    let out = run_command(Command::Lift, &model("grushin"), &Flags::default()).unwrap();
    assert!(out.success(), "{}", out.csv);
    assert_eq!(out.report.data["big_q"], 4);
    assert!(out.report.checks.len() >= 10);

    let out = run_command(Command::Heat, &model("grushin_quartic"), &Flags::default()).unwrap();
    assert!(out.success(), "{}", out.csv);
    assert_eq!(out.report.data["q_extended"], 7);
    assert_eq!(out.report.data["time_exponent"], 4);
}

#[test]
fn report_records_flags_and_csv_header() {
    let flags = Flags {
        seed: Some(9),
        at: vec!["0,0;1,0".into()],
        ..Default::default()
    };
    let out = run_command(Command::Distance, &model("grushin"), &flags).unwrap();
    assert_eq!(out.report.flags["seed"], 9);
    assert_eq!(out.report.flags["distance_tol"], 1e-3);
    assert_eq!(out.report.flags["samples"], 400);
    assert!(out.csv.starts_with("x,y,upper,lower,miss\n"));
    let upper: f64 = out.csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((upper - 1.0).abs() <= 1e-3);
    let v: serde_json::Value = serde_json::from_str(&out.report.to_json()).unwrap();
    assert_eq!(v["schema"], "1");
}

#[test]
fn exit_status_follows_checks() {
    let ok = bin().args(["analyze", "--model"]).arg(model_path("grushin")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["command"], "analyze");

    // A mixed second-order operator is homogeneous but not of the positive
    // Rockland pattern, so the heat check fails.
    let dir = std::env::temp_dir().join(format!("rockland-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("mixed.rock");
    std::fs::write(&path, "dilation [1, 2];\nfield X1 = d1;\nfield X2 = x1*d2;\noperator L = X1*X2 + X2*X1;\n").unwrap();
    let json = dir.join("out.json");
    let fail = bin().args(["heat", "--model"]).arg(&path).arg("--json").arg(&json).output().unwrap();
    assert_eq!(fail.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let failed: Vec<_> = v["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "heat/positive_rockland_pattern");

    let refused = bin().args(["gamma", "--model"]).arg(model_path("power_plane_quartic_k2")).output().unwrap();
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("existence requires nu < q"));

    let bad = dir.join("bad.rock");
    std::fs::write(&bad, "dilation [1, 2];\nfield X = x1^(1/2)*d2;\n").unwrap();
    let parse = bin().args(["analyze", "--model"]).arg(&bad).output().unwrap();
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("line 2, column"));
    std::fs::remove_dir_all(&dir).unwrap();
}
