use std::path::Path;
use std::process::{Command, Output};

use povmsim_core::constructions::{qubit_fiducial, qutrit_fiducial, sic2};
use povmsim_core::{Operator, Povm, Tolerances};
use serde_json::Value;

fn povmsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povmsim")).args(args).env_remove("POVMSIM_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = povmsim(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn write_povm(dir: &Path, name: &str, p: &Povm) -> String {
    let path = dir.join(name);
    std::fs::write(&path, p.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn construct_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hesse.json");
    let o = povmsim(&["construct", "hesse", "-o", file.to_str().unwrap()]);
    assert!(o.status.success());
    let p = Povm::from_json(&std::fs::read_to_string(&file).unwrap(), &Tolerances::default()).unwrap();
    assert_eq!((p.dim(), p.outcomes()), (3, 9));
    let v = json(&["validate", file.to_str().unwrap(), "--json"]);
    assert_eq!(v["valid"], true);
    assert_eq!(v["povm"], "hesse");
    let printed = stdout(&povmsim(&["construct", "fsic2:4"]));
    let q = Povm::from_json(&printed, &Tolerances::default()).unwrap();
    assert_eq!((q.dim(), q.outcomes()), (4, 6));
}

#[test]
fn invalid_povm_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let doubled = Povm::new(vec![Operator::identity(2), Operator::identity(2)]).unwrap();
    let file = write_povm(dir.path(), "doubled.json", &doubled);
    let o = povmsim(&["validate", &file, "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);
    assert!(v["violations"][0].as_str().unwrap().contains("sum to the identity"));
}

#[test]
fn visibility_reports_the_analysis_fields() {
    let v = json(&["visibility", "sic2", "--json"]);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).take(6).collect();
    assert_eq!(keys, ["value", "exact", "noise", "gap", "iterations", "wall_ms"]);
    assert!((v["value"].as_f64().unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-6);
    assert_eq!(v["exact"], true);
    assert_eq!(v["noise"], "depolarizing");
    assert!(v["gap"].as_f64().unwrap() <= 1e-6);
    let w = json(&["visibility", "norrell", "--noise", "worst", "--json"]);
    assert!((w["value"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-5);
    assert_eq!(w["noise"], "worst-case");
}

#[test]
fn extracted_model_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let v = json(&["visibility", "hesse", "--extract", "--model-out", model.to_str().unwrap(), "--json"]);
    assert!(v["model_residual"].as_f64().unwrap() <= 1e-10);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    let entries = m["entries"].as_array().unwrap();
    assert_eq!(entries.len(), v["model_measurements"].as_u64().unwrap() as usize);
    let total: f64 = entries.iter().map(|e| e["weight"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(povmsim(&["visibility", "hesse", "--extract", "--noise", "worst"]).status.code() == Some(2));
}

#[test]
fn feasibility_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(json(&["feasibility", "sic2", "--json"])["value"], "not-simulable");
    let noisy = write_povm(dir.path(), "noisy.json", &sic2().depolarize(0.5).unwrap());
    let v = json(&["feasibility", &noisy, "--json"]);
    assert_eq!(v["value"], "simulable");
    assert_eq!(v["exact"], true);
    // two pairings of the outcomes cannot reproduce the SIC even linearly
    assert_eq!(json(&["feasibility", "sic2", "--ranks", "1,1,0,0;0,0,1,1", "--json"])["value"], "not-simulable");
    assert_eq!(povmsim(&["feasibility", "sic2", "--ranks", "1,1,0"]).status.code(), Some(2));
}

#[test]
fn witness_and_certificate() {
    let w = json(&["witness", "sic2", "--package-size", "3", "--json"]);
    assert!((w["beta"].as_f64().unwrap() - (1.0 / 6f64.sqrt() + 0.5)).abs() < 1e-6);
    assert_eq!(w["failed_packages"], 0);
    let c = json(&["certify", "sic2", "--json"]);
    assert!((c["value"].as_f64().unwrap() - 0.8165).abs() < 1e-4);
    let gammas = c["gammas"].as_array().unwrap();
    assert_eq!(gammas.len(), 4);
    assert_eq!(gammas[0].as_array().unwrap().len(), 2);
    assert!(c["witness"].as_f64().unwrap() < 0.0);
    let dir = tempfile::tempdir().unwrap();
    let flat = Povm::new(vec![Operator::identity(2).scale(0.5); 2]).unwrap();
    let o = povmsim(&["certify", &write_povm(dir.path(), "flat.json", &flat)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no witness"));
}

#[test]
fn sweep_endpoints_and_errors() {
    let o = povmsim(&["sweep", "--samples", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["param", "v", "exact", "gap", "status"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let v: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((v[0] - 0.79313).abs() < 1e-4, "{v:?}");
    assert!((v[2] - 0.8058).abs() < 5e-4, "{v:?}");
    assert!(v[1] > v[0] && v[2] > v[1]);
    assert!(rows.iter().all(|r| &r[4] == "ok"));
    assert_eq!(povmsim(&["sweep", "--from", "0.1", "--to", "0.1"]).status.code(), Some(2));
    assert_eq!(povmsim(&["sweep", "--samples", "1"]).status.code(), Some(2));
    let f = stdout(&povmsim(&["sweep", "fsic2", "--from", "2", "--to", "4"]));
    let lines: Vec<&str> = f.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("4,0.7855"));
}

#[test]
fn qubit_search_finds_the_sic() {
    let dir = tempfile::tempdir().unwrap();
    let best = dir.path().join("best.json");
    let v = json(&[
        "search", "--dim", "2", "--outcomes", "4", "--restarts", "4", "--povm-out", best.to_str().unwrap(), "--json",
    ]);
    assert!((v["best"]["value"].as_f64().unwrap() - 0.8165).abs() < 1e-3);
    assert_eq!(v["traces"].as_array().unwrap().len(), 4);
    let counts: u64 = v["fixed_points"].as_array().unwrap().iter().map(|p| p["count"].as_u64().unwrap()).sum();
    assert_eq!(counts, 4);
    let p = Povm::from_json(&std::fs::read_to_string(&best).unwrap(), &Tolerances::default()).unwrap();
    assert!(p.validate().is_valid());
    let again = json(&["search", "--dim", "2", "--outcomes", "4", "--restarts", "4", "--json"]);
    assert_eq!(again["best"]["value"], v["best"]["value"]);
}

#[test]
fn tables_reproduce_the_desk_scale_rows() {
    let o = povmsim(&["tables", "--csv"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let passed = rows.iter().filter(|r| &r[7] == "pass").count();
    assert_eq!(passed, 14);
    assert!(rows.iter().any(|r| &r[1] == "3c" && &r[2] == "v_depol" && &r[7] == "pass"));
    assert!(rows.iter().any(|r| &r[1] == "4a" && r[7].starts_with("skipped")));
}

#[test]
fn fiducial_file_rows() {
    let dir = tempfile::tempdir().unwrap();
    let amps = |f: povmsim_core::StateVector| f.amplitudes().iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>();
    // The Hesse fiducial does not have the 3a thresholds; the qubit one has no published row.
    let doc = serde_json::json!([
        {"label": "3a", "amplitudes": amps(qutrit_fiducial(0.0))},
        {"label": "2x", "amplitudes": amps(qubit_fiducial())},
    ]);
    let file = dir.path().join("fiducials.json");
    std::fs::write(&file, doc.to_string()).unwrap();
    let o = povmsim(&["tables", "--fiducials", file.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = rows.as_array().unwrap();
    let find = |row: &str, q: &str| rows.iter().find(|r| r["row"] == row && r["quantity"] == q).unwrap().clone();
    assert_eq!(find("3a", "v_depol")["status"], "FAIL");
    assert_eq!(find("2x", "beta")["status"], "computed");
    assert!((find("2x", "v_beta")["computed"].as_f64().unwrap() - 0.8165).abs() < 1e-4);
}

#[test]
fn verify_passes() {
    let o = povmsim(&["verify", "--json"]);
    assert!(o.status.success());
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(rows.as_array().unwrap().iter().all(|r| r["status"] == "pass"));
    assert!(rows.as_array().unwrap().len() >= 10);
}

#[test]
fn usage_errors() {
    let o = povmsim(&["visibility", "sic7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("neither a file nor a known POVM name"));
    assert_eq!(povmsim(&["visibility", "sic2", "--json", "--csv"]).status.code(), Some(2));
    assert_eq!(povmsim(&["visibility", "sic2", "--tol", "2"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_povmsim")).args(["verify"]).env("POVMSIM_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_povmsim")).args(["visibility", "sic2"]).env("POVMSIM_THREADS", "1").output().unwrap();
    assert!(o.status.success());
}

#[test]
fn csv_output_is_one_header_and_one_row() {
    let text = stdout(&povmsim(&["visibility", "sic2", "--csv"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("value,exact,noise,gap,iterations,wall_ms"));
    assert!(lines[1].starts_with("0.816496"));
}
