// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drc::ViolationReport;
use crate::gds::{write_gds, Layout};
use crate::process::StepPlan;
use crate::waferplan::WaferPlan;

use super::{write_trap, JobDeck, MdpError, TapeoutReport, TrapezoidSet};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub struct PackageInputs<'a> {
    pub layout: &'a Layout,
    pub wafer: &'a Layout,
    pub drc: &'a ViolationReport,
    pub tapeout: &'a TapeoutReport,
    pub step_plan: &'a StepPlan,
    pub plan: &'a WaferPlan,
    pub traps: &'a [TrapezoidSet],
    pub jobdeck: &'a JobDeck,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub files: Vec<ManifestEntry>,
    pub drc_violations: usize,
    pub tapeout_pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waiver: Option<String>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    format!("{:x}", Sha256::digest(data))
}

/// Reasons the gate refuses a package, empty when it may be written.
pub fn gate_failures(drc: &ViolationReport, tapeout: &TapeoutReport) -> Vec<String> {
    let mut out = Vec::new();
    for v in drc.violations.iter().take(10) {
        out.push(format!("{} at ({}, {}): {}", v.rule_id, v.location.min.x, v.location.min.y, v.message));
    }
    if drc.violations.len() > 10 {
        out.push(format!("... and {} more DRC violations", drc.violations.len() - 10));
    }
    out.extend(drc.errors.iter().map(|e| format!("DRC error: {e}")));
    out.extend(tapeout.failed().into_iter().map(|c| format!("{} {} failed", c.id, c.name)));
    out
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> MdpError + '_ {
    move |e| MdpError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes the foundry package to `dir` through a sibling temporary
/// directory, so `dir` either holds a complete package or is left alone.
pub fn export_package(inputs: &PackageInputs, dir: &Path, waiver: Option<&str>) -> Result<Manifest, MdpError> {
    let failures = gate_failures(inputs.drc, inputs.tapeout);
    if !failures.is_empty() && waiver.is_none() {
        return Err(MdpError::Gate(failures));
    }
    let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("package");
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(io(parent))?;
    let tmp = parent.join(format!(".{name}.tmp"));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io(&tmp))?;
    }
    let result = write_all(inputs, &tmp, waiver, &failures).and_then(|m| {
        let old = parent.join(format!(".{name}.old"));
        if dir.exists() {
            if old.exists() {
                fs::remove_dir_all(&old).map_err(io(&old))?;
            }
            fs::rename(dir, &old).map_err(io(dir))?;
        }
        fs::rename(&tmp, dir).map_err(io(dir))?;
        if old.exists() {
            fs::remove_dir_all(&old).map_err(io(&old))?;
        }
        Ok(m)
    });
    if result.is_err() && tmp.exists() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}

fn write_all(inputs: &PackageInputs, tmp: &Path, waiver: Option<&str>, failures: &[String]) -> Result<Manifest, MdpError> {
    let mask = tmp.join("mask");
    fs::create_dir_all(&mask).map_err(io(&mask))?;
    let gds = |l: &Layout| write_gds(l).map_err(|e| MdpError::Gds(e.to_string()));
    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("layout.gds".into(), gds(inputs.layout)?),
        ("wafer.gds".into(), gds(inputs.wafer)?),
        ("drc_report.json".into(), inputs.drc.to_json().into_bytes()),
        ("tapeout_report.json".into(), inputs.tapeout.to_json().into_bytes()),
        ("step_plan.csv".into(), inputs.step_plan.to_csv().map_err(|e| MdpError::Csv(e.to_string()))?.into_bytes()),
        ("wafer_plan.json".into(), inputs.plan.to_json().into_bytes()),
        ("jobdeck.json".into(), inputs.jobdeck.to_json().into_bytes()),
    ];
    for set in inputs.traps {
        files.push((format!("mask/{}", set.file_name()), write_trap(set).into_bytes()));
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut entries = Vec::new();
    for (rel, data) in &files {
        let path = tmp.join(rel);
        fs::write(&path, data).map_err(io(&path))?;
        entries.push(ManifestEntry { path: rel.clone(), sha256: sha256_hex(data), bytes: data.len() as u64 });
    }
    let waiver = waiver.map(|w| {
        if failures.is_empty() {
            w.to_string()
        } else {
            format!("{w} (waived: {})", failures.join("; "))
        }
    });
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        files: entries,
        drc_violations: inputs.drc.violations.len(),
        tapeout_pass: inputs.tapeout.overall,
        waiver,
    };
    let mpath = tmp.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&mpath, text).map_err(io(&mpath))?;
    verify_manifest(tmp)?;

    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({
        "created_unix_s": created,
        "generator": format!("qflow {}", env!("CARGO_PKG_VERSION")),
    });
    let meta_path = tmp.join("metadata.json");
    fs::write(&meta_path, format!("{meta:#}\n")).map_err(io(&meta_path))?;
    Ok(manifest)
}

/// Re-reads every file listed in `dir/manifest.json` and compares checksums.
pub fn verify_manifest(dir: &Path) -> Result<Manifest, MdpError> {
    let mpath = dir.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(io(&mpath))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| MdpError::Manifest(format!("{}: {e}", mpath.display())))?;
    for e in &manifest.files {
        let p: PathBuf = dir.join(&e.path);
        let data = fs::read(&p).map_err(io(&p))?;
        if sha256_hex(&data) != e.sha256 || data.len() as u64 != e.bytes {
            return Err(MdpError::Manifest(format!("checksum mismatch for {}", e.path)));
        }
    }
    Ok(manifest)
}
