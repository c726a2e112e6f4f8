// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qflow_core::chipgen::{generate_chip, inject_defect, ChipSpec};
use qflow_core::gds::write_gds;
use qflow_core::pdk::{builtin, RuleId};

fn qflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn qflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Relative path to file bytes for everything under `root`.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn defective_layout(dir: &Path, rule: RuleId) -> PathBuf {
    let pdk = builtin("qeda").unwrap();
    let chip = generate_chip(&ChipSpec::default(), &pdk).unwrap();
    let bad = inject_defect(&chip.layout, rule, &pdk.rules).unwrap();
    let path = dir.join(format!("bad_{rule:?}.gds"));
    fs::write(&path, write_gds(&bad).unwrap()).unwrap();
    path
}

#[test]
fn pipeline_passes_and_writes_package() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qflow(tmp.path(), &["pipeline", "--format", "json,text,svg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("qflow pipeline: pass"));
    let out = tmp.path().join("out");
    for f in [
        "layout.gds",
        "census.json",
        "drc_report.json",
        "drc_report.txt",
        "drc_report.svg",
        "step_plan.csv",
        "registration.json",
        "wafer_plan.json",
        "wafer.gds",
        "wafer.svg",
        "reticles.json",
        "jobdeck.json",
        "tapeout_report.json",
        "tapeout_report.txt",
        "package/manifest.json",
        "package/layout.gds",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let census: serde_json::Value = serde_json::from_slice(&fs::read(out.join("census.json")).unwrap()).unwrap();
    assert_eq!(census["total"], 28);
    let reticles: serde_json::Value = serde_json::from_slice(&fs::read(out.join("reticles.json")).unwrap()).unwrap();
    assert_eq!(reticles.as_array().unwrap().len(), 7);
}

#[test]
fn pipeline_matches_single_commands() {
    let a = tempfile::tempdir().unwrap();
    let o = qflow(a.path(), &["pipeline"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let b = tempfile::tempdir().unwrap();
    for cmd in ["gen", "drc", "map", "plan", "fracture", "tapeout", "export"] {
        let o = qflow(b.path(), &[cmd]);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
    }
    let ignore = |p: &Path| p.ends_with("package/metadata.json") || p.ends_with("package/manifest.json");
    let ta: BTreeMap<_, _> = tree(&a.path().join("out")).into_iter().filter(|(p, _)| !ignore(p)).collect();
    let tb: BTreeMap<_, _> = tree(&b.path().join("out")).into_iter().filter(|(p, _)| !ignore(p)).collect();
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (p, bytes) in &ta {
        assert!(tb[p] == *bytes, "{} differs", p.display());
    }
}

#[test]
fn reports_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = qflow(d.path(), &["pipeline", "--gen", "qubits=8", "topology=grid"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["layout.gds", "drc_report.json", "wafer_plan.json", "jobdeck.json", "mask/1_0.trap"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn drc_on_defect_exits_one_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = defective_layout(tmp.path(), RuleId::R2);
    let o = qflow(tmp.path(), &["drc", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("1 DRC violation"), "{}", stderr(&o));
    let rep: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("out/drc_report.json")).unwrap()).unwrap();
    let v = rep["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["rule_id"], "R2");
}

#[test]
fn export_refuses_dirty_layout_unless_waived() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = defective_layout(tmp.path(), RuleId::R1);
    let path = bad.to_str().unwrap();
    let o = qflow(tmp.path(), &["export", path]);
    assert_eq!(code(&o), 1);
    assert!(!tmp.path().join("out/package").exists());

    let o = qflow(tmp.path(), &["export", path, "--waiver", "accepted for test run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = fs::read_to_string(tmp.path().join("out/package/manifest.json")).unwrap();
    assert!(m.contains("accepted for test run"));
}

#[test]
fn operational_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qflow(tmp.path(), &["drc", "does_not_exist.gds"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("error"), "{}", stderr(&o));

    fs::write(tmp.path().join("junk.gds"), b"not a gds stream").unwrap();
    assert_eq!(code(&qflow(tmp.path(), &["drc", "junk.gds"])), 2);

    assert_eq!(code(&qflow(tmp.path(), &["gen", "--deck", "nope"])), 2);
    assert_eq!(code(&qflow(tmp.path(), &["gen", "--gen", "qubits=5"])), 2);
    assert_eq!(code(&qflow(tmp.path(), &["gen", "--gen", "die_um=500x500"])), 2);
}

#[test]
fn pdk_file_and_cmc_deck() {
    let tmp = tempfile::tempdir().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../pdks/qeda.json");
    let path = path.to_str().unwrap();
    let o = qflow(tmp.path(), &["gen", "--pdk", path]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = qflow(tmp.path(), &["drc", "--pdk", path]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // the cmc deck runs on the same layout; its verdict depends on that deck's rules
    let o = qflow(tmp.path(), &["drc", "--deck", "cmc"]);
    assert!(matches!(code(&o), 0 | 1), "{}", stderr(&o));
    assert!(tmp.path().join("out/drc_report.json").is_file());
}

#[test]
fn documented_pipeline_invocation() {
    let tmp = tempfile::tempdir().unwrap();
    let pdks = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../pdks");
    fs::create_dir(tmp.path().join("pdks")).unwrap();
    fs::copy(pdks.join("qeda.json"), tmp.path().join("pdks/qeda.json")).unwrap();
    let o = qflow(
        tmp.path(),
        &["pipeline", "--pdk", "pdks/qeda.json", "--gen", "qubits=4", "topology=diamond", "--out", "out/"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("out/package/manifest.json").is_file());
}
