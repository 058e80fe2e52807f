//! End-to-end subcommand behavior through the built binary: exit codes,
//! report structure, and determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bellkit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellkit"))
}

fn run(args: &[&str]) -> Output {
    bellkit().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is a JSON report")
}

fn write_file(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

const CONTRADICTORY_FAMILY: &str = "var_i,var_j,p_pp,p_pm,p_mp,p_mm\n\
0,1,0.5,0,0,0.5\n\
0,2,0.5,0,0,0.5\n\
1,2,0,0.5,0.5,0\n";

#[test]
fn check_reports_infeasible_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let family = write_file(dir.path(), "family.csv", CONTRADICTORY_FAMILY);
    let output = run(&["check", "--family", &family]);
    let report = stdout_json(&output);
    assert_eq!(report["results"]["status"], "INFEASIBLE");
    assert_eq!(report["inputs"]["mode"], "exact");
    assert_eq!(report["tool"], "bellkit");

    // Findings flip the exit code only on request.
    let output = bellkit()
        .args(["check", "--family", &family, "--fail-on-findings"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn quasi_reports_exact_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let family = write_file(dir.path(), "family.csv", CONTRADICTORY_FAMILY);
    let output = run(&["quasi", "--family", &family]);
    let report = stdout_json(&output);
    assert_eq!(report["results"]["negativity"]["exact"], "1/2");
    assert_eq!(report["results"]["negativity"]["float"], 0.5);
}

#[test]
fn predict_emits_tables_and_violated_wigner() {
    let output = run(&["predict", "--angles", "0,60,30"]);
    let report = stdout_json(&output);
    assert_eq!(report["results"]["compatibility"], "INFEASIBLE");
    let inequalities = report["results"]["inequalities"].as_array().unwrap();
    let wigner = inequalities.iter().find(|i| i["name"] == "wigner").unwrap();
    assert_eq!(wigner["violated"], true);
    // The mathematical sides: 0.25 on the sum side, 0.375 on the single side.
    assert!((wigner["rhs"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((wigner["lhs"].as_f64().unwrap() - 0.375).abs() < 1e-12);
    let tables = report["results"]["tables"].as_array().unwrap();
    assert_eq!(tables.len(), 3);
}

#[test]
fn malformed_csv_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let family = write_file(
        dir.path(),
        "bad.csv",
        "var_i,var_j,p_pp,p_pm,p_mp,p_mm\n0,1,a,b,c,d\n",
    );
    let output = bellkit().args(["check", "--family", &family]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "error should carry a line number: {stderr}");
}

#[test]
fn unknown_subcommand_exits_two() {
    let output = bellkit().arg("elaborate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

const SIM_CONFIG: &str = r#"
model = "table"
trials = 20000

[table]
theta1_deg = 0.0
theta2_deg = 60.0
cells = [0.125, 0.375, 0.375, 0.125]
"#;

#[test]
fn simulate_is_byte_deterministic_and_roundtrips_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(dir.path(), "sim.toml", SIM_CONFIG);
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    let csv1 = dir.path().join("c1.csv");
    let csv2 = dir.path().join("c2.csv");

    for (out, csv) in [(&out1, &csv1), (&out2, &csv2)] {
        let output = bellkit()
            .args([
                "simulate",
                "--config",
                &config,
                "--seed",
                "7",
                "--out",
                &out.display().to_string(),
                "--csv-out",
                &csv.display().to_string(),
            ])
            .output()
            .unwrap();
        assert!(output.status.success());
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    assert_eq!(std::fs::read(&csv1).unwrap(), std::fs::read(&csv2).unwrap());

    // The CSV parses back, counts intact.
    let records = bellkit::io::parse_coincidence_csv(&csv1).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].total(), 20000);

    // A different seed changes the stream.
    let out3 = dir.path().join("r3.json");
    let output = bellkit()
        .args(["simulate", "--config", &config, "--seed", "8", "--out", &out3.display().to_string()])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert_ne!(std::fs::read(&out1).unwrap(), std::fs::read(&out3).unwrap());
}

#[test]
fn analyze_flags_injected_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(
        dir.path(),
        "data.csv",
        "theta1_deg,theta2_deg,n_pp,n_pm,n_mp,n_mm\n0,60,145000,395000,355000,105000\n",
    );
    let output = run(&["analyze", "--data", &data, "--combo", "1,1,-1,-1"]);
    let report = stdout_json(&output);
    let record = &report["results"]["records"][0];
    assert!((record["delta_e"].as_f64().unwrap()).abs() < 1e-12);
    assert!(
        (record["combinations"][0]["value"].as_f64().unwrap() - 0.08).abs() < 1e-12
    );
    assert!(!record["flags"].as_array().unwrap().is_empty());
}

#[test]
fn cross_traces_each_estimate_to_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_file(
        dir.path(),
        "records.csv",
        "theta1_deg,theta2_deg,n_pp,n_pm,n_mp,n_mm\n\
         0,60,1000,3000,3000,1000\n\
         30,60,3000,1000,1000,3000\n\
         0,30,3000,1000,1000,3000\n",
    );
    let output = run(&["cross", "--data", &data, "--inequality", "bell", "--angles", "0,60,30"]);
    let report = stdout_json(&output);
    let margin = report["results"]["report"]["margin"].as_f64().unwrap();
    assert!((margin - 0.5).abs() < 1e-12);
    let estimates = report["results"]["estimates"].as_array().unwrap();
    let sources: Vec<u64> =
        estimates.iter().map(|e| e["record_index"].as_u64().unwrap()).collect();
    assert_eq!(sources, vec![0, 1, 2]);

    // Missing context is an input error.
    let short = write_file(
        dir.path(),
        "short.csv",
        "theta1_deg,theta2_deg,n_pp,n_pm,n_mp,n_mm\n0,60,1,1,1,1\n",
    );
    let output = bellkit()
        .args(["cross", "--data", &short, "--inequality", "bell", "--angles", "0,60,30"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn legget_consistency_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_file(
        dir.path(),
        "legget.toml",
        r#"
a_setting_deg = 0.0
b_setting_deg = 22.5
u_grid_deg = [0.0, 90.0]
v_grid_deg = [0.0, 90.0]
lambda_grid = [0.0, 1.0]
weights = [0.25, 0.0, 0.125, 0.125, 0.125, 0.125, 0.25, 0.0]
a_rule = { kind = "sign_cos_u" }
b_rule = { kind = "sign_lambda", cut = 0.5 }
"#,
    );
    let output = run(&["legget", "--config", &config]);
    let report = stdout_json(&output);
    assert_eq!(report["results"]["consistent"], true);
    assert!(report["results"]["difference"].as_f64().unwrap() <= 1e-12);
}
