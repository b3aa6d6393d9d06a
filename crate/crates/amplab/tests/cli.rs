use std::path::Path;
use std::process::{Command, Output};

use amplab::experiments::tn::TnSummary;
use amplab::manifest::{sha256_hex, Manifest, MANIFEST_FILE, TIMING_FILE};
use amplab_core::stateevo::SEResult;

fn amplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amplab"))
        .args(args)
        .env("AMPLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn tn_limit_of_an_odd_network_is_zero_with_a_note() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "odd.json",
        r#"{"network": {"nvars": 1, "vertices": [[[[1], 1.0]], [[[0], 1.0]], [[[2], 1.0]], [[[1], 1.0]]],
                        "edges": [[0, 1], [1, 2], [2, 3]]},
            "inputs": [{"law": "standard_normal"}]}"#,
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&amplab(&["tn-limit", "--config", &cfg]))).unwrap();
    assert_eq!(json["value"], 0.0);
    assert!(json["note"].as_str().unwrap().contains("odd-edge parity"), "{json}");

    let csv = stdout(&amplab(&["tn-limit", "--config", &cfg, "--format", "csv"]));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), 0.0);
    assert!(row[1].contains("odd-edge parity"));
}

#[test]
fn tn_limit_routes_agree_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#""network": {"nvars": 1, "vertices": [[[[2], 1.0]], [[[0], 1.0]], [[[2], 1.0]]], "edges": [[0, 1], [1, 2]]},
                  "inputs": [{"law": "standard_normal"}]"#;
    let value = |extra: &str| -> f64 {
        let cfg = write(dir.path(), "net.json", &format!("{{{base}{extra}}}"));
        let json: serde_json::Value = serde_json::from_str(&stdout(&amplab(&["tn-limit", "--config", &cfg]))).unwrap();
        json["value"].as_f64().unwrap()
    };
    let wigner = value("");
    let chains = value(r#", "spectrum": {"law": "semicircle"}, "route": "chains""#);
    let moebius = value(r#", "spectrum": {"law": "semicircle"}, "route": "moebius""#);
    assert!((wigner - chains).abs() < 1e-12 && (chains - moebius).abs() < 1e-12, "{wigner} {chains} {moebius}");
    assert!(wigner > 0.0);
}

#[test]
fn se_predict_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "model.json",
        r#"{"horizon": 3, "init": {"u1": {"law": "standard_normal"}},
            "u": [{"kind": "tanh"}, {"kind": "tanh"}, {"kind": "tanh"}], "mc": {"samples": 20000}}"#,
    );
    let a = stdout(&amplab(&["se-predict", "--config", &cfg, "--seed", "9"]));
    let b = stdout(&amplab(&["se-predict", "--config", &cfg, "--seed", "9"]));
    assert_eq!(a, b);
    let c = stdout(&amplab(&["se-predict", "--config", &cfg, "--seed", "10"]));
    assert_ne!(a, c);
    let se: SEResult = serde_json::from_str(&a).unwrap();
    assert_eq!((se.horizon, se.seed), (3, 9));
    assert!(se.sigma.is_symmetric(0.0));
}

#[test]
fn sample_goe_prints_a_symmetric_csv() {
    let csv = stdout(&amplab(&["sample", "--kind", "goe", "--n", "4", "--format", "csv"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c1,c2,c3,c4");
    let rows: Vec<Vec<f64>> = lines[1..].iter().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 4);
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, rows[j][i]);
        }
    }
}

#[test]
fn sample_writes_into_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = amplab(&["sample", "--kind", "gaussian_white_noise", "--n", "6", "--m", "3", "--seed", "4", "--format", "json", "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(out.join("matrix.json")).unwrap()).unwrap();
    assert_eq!((rows.len(), rows[0].len()), (3, 6));
}

#[test]
fn se_check_with_zero_horizon_writes_manifest_and_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.json",
        r#"{"seed": 1, "experiment": {"kind": "se_check", "n": 10,
            "ensembles": [{"name": "goe", "spec": {"kind": "goe"}}],
            "model": {"horizon": 0, "init": {"u1": {"law": "standard_normal"}}, "u": []}}}"#,
    );
    let out = dir.path().join("run");
    let o = amplab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("se_check: PASS"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ensembles"], serde_json::json!([]));
    assert!(out.join(MANIFEST_FILE).exists());
}

#[test]
fn path_network_matches_its_limit_on_three_ensembles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "path.json",
        r#"{"seed": 12, "trials": 40, "experiment": {"kind": "tn_universality", "n": 256,
            "networks": {"set": "explicit", "networks": [
                {"nvars": 1, "vertices": [[[[0], 1.0]], [[[0], 1.0]], [[[0], 1.0]]], "edges": [[0, 1], [1, 2]]}]},
            "inputs": [{"law": "standard_normal"}],
            "ensembles": [{"name": "goe", "spec": {"kind": "goe"}},
                          {"name": "rademacher", "spec": {"kind": "generalized_wigner", "profile": {"profile": "ones"}, "entry_law": {"law": "rademacher"}}},
                          {"name": "hadamard", "spec": {"kind": "sym_invariant", "eigenvalue_law": {"law": "semicircle"}, "basis": "hadamard"}}]}}"#,
    );
    let out = dir.path().join("run");
    stdout(&amplab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]));
    let s: TnSummary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s.ensembles.len(), 3);
    for e in &s.ensembles {
        let x = &e.entries[0];
        assert_eq!(x.limit, 1.0);
        assert!(x.z_score.abs() <= 3.0, "{}: {x:?}", e.name);
    }
}

#[test]
fn manifest_hashes_every_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sk.json", r#"{"seed": 3, "experiment": {"kind": "sinkhorn_demo", "m": 5, "n": 7}}"#);
    let out = dir.path().join("run");
    stdout(&amplab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]));
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE && n != TIMING_FILE)
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    listed.sort();
    assert_eq!(listed, on_disk);
    for f in &manifest.files {
        let bytes = std::fs::read(out.join(&f.path)).unwrap();
        assert_eq!(f.sha256, sha256_hex(&bytes));
        assert_eq!(f.bytes, bytes.len() as u64);
    }
    assert_eq!(manifest.unhashed, vec![TIMING_FILE.to_string()]);
    assert_eq!(manifest.master_seed, 3);
}

#[test]
fn failing_thresholds_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "strict.json",
        r#"{"seed": 2, "trials": 2, "experiment": {"kind": "se_check", "n": 50, "tolerance": 0.0,
            "ensembles": [{"name": "goe", "spec": {"kind": "goe"}}],
            "model": {"horizon": 2, "init": {"u1": {"law": "standard_normal"}}, "u": [{"kind": "tanh"}, {"kind": "tanh"}], "mc": {"samples": 5000}},
            "reference_samples": 500}}"#,
    );
    let out = dir.path().join("run");
    let o = amplab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("se_check: FAIL"));
    assert!(out.join("summary.json").exists());
}

#[test]
fn invalid_configurations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.json", r#"{"seed": 1, "experiment": {"kind": "sinkhorn_demo", "m": 2, "n": 2, "colour": 1}}"#);
    let o = amplab(&["experiment", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let semantic = write(dir.path(), "semantic.json", r#"{"trials": 0, "experiment": {"kind": "cs_phase_diagram", "n": 8, "deltas": [1.5], "rhos": [0.1], "sensing": []}}"#);
    let o = amplab(&["experiment", "--config", &semantic]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for needle in ["sensing", "deltas", "trials"] {
        assert!(err.contains(needle), "{err}");
    }

    let unit = write(dir.path(), "unit.json", r#"{"kind": "goe", "sparsity": 0.5}"#);
    let o = amplab(&["sample", "--config", &unit, "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sparsity"));

    let o = amplab(&["sample", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
}
