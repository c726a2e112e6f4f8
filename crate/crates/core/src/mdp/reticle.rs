// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{Rect, Trapezoid};
use crate::pdk::{Lithography, ProcessStack};
use crate::waferplan::WaferPlan;

use super::{MdpError, TrapezoidSet};

pub const JOBDECK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReticleData {
    pub id: String,
    pub layer: u16,
    pub datatype: u16,
    pub process_step: String,
    pub lithography: Lithography,
    /// Exposure field in µm.
    pub field_size_um: [f64; 2],
    /// Field bounds in layout nm.
    pub field: Rect,
    pub trap_file: String,
    pub shape_count: usize,
    /// SHA-256 of the sorted trapezoid list.
    pub checksum: String,
}

/// Order-independent digest of a trapezoid multiset.
pub fn trapezoid_checksum(traps: &[Trapezoid]) -> String {
    let mut sorted = traps.to_vec();
    sorted.sort_unstable();
    let mut h = Sha256::new();
    for t in &sorted {
        for v in [t.y_bottom, t.y_top, t.x_bottom_left, t.x_bottom_right, t.x_top_left, t.x_top_right] {
            h.update(v.to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

/// One reticle per fractured (layer, datatype) bound to a patterned process
/// layer. Sets on unpatterned layers (outline, scribe markers) are skipped.
pub fn build_reticles(sets: &[TrapezoidSet], field: Rect, stack: &ProcessStack) -> Result<Vec<ReticleData>, MdpError> {
    let mut out = Vec::new();
    for set in sets {
        let Some(step) = stack.layer_for_binding(set.layer, set.datatype) else {
            return Err(MdpError::Unbound { layer: set.layer, datatype: set.datatype });
        };
        if !step.lithography.is_patterned() {
            log::info!("({}, {}) is on unpatterned step {:?}; no reticle", set.layer, set.datatype, step.name);
            continue;
        }
        if let Some(t) = set.trapezoids.iter().find(|t| !field.contains_rect(&t.bbox())) {
            return Err(MdpError::OutsideField { layer: set.layer, datatype: set.datatype, shape: t.bbox(), field });
        }
        out.push(ReticleData {
            id: format!("RET_{}_{}", set.layer, set.datatype),
            layer: set.layer,
            datatype: set.datatype,
            process_step: step.name.clone(),
            lithography: step.lithography,
            field_size_um: [field.width() as f64 / 1e3, field.height() as f64 / 1e3],
            field,
            trap_file: format!("mask/{}", set.file_name()),
            shape_count: set.trapezoids.len(),
            checksum: trapezoid_checksum(&set.trapezoids),
        });
    }
    for step in stack.layers.iter().filter(|l| l.lithography.is_patterned()) {
        for &(l, d) in &step.gds_bindings {
            if !out.iter().any(|r| r.layer == l && r.datatype == d) {
                log::info!("({l}, {d}) on step {:?} is unpopulated; no reticle", step.name);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobEntry {
    pub reticle_id: String,
    pub process_step: String,
    pub step_order: u32,
    pub lithography: Lithography,
    pub exposure_dose: f64,
    pub dose_unit: String,
    pub focus_offset_nm: i64,
    pub alignment_strategy: String,
    pub step_pitch_mm: [f64; 2],
    pub site_count: usize,
    /// JSON pointer into wafer_plan.json.
    pub sites_ref: String,
    pub trap_file: String,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDeck {
    pub schema_version: u32,
    pub wafer_diameter_mm: f64,
    pub grid_offset_mm: [f64; 2],
    pub entries: Vec<JobEntry>,
    pub reticles: Vec<ReticleData>,
}

impl JobDeck {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("job deck serializes");
        s.push('\n');
        s
    }
}

/// Exposure entries in process order.
pub fn build_job_deck(plan: &WaferPlan, reticles: &[ReticleData], stack: &ProcessStack) -> Result<JobDeck, MdpError> {
    let mut entries = Vec::new();
    for r in reticles {
        let step = stack
            .layer_for_binding(r.layer, r.datatype)
            .ok_or(MdpError::Unbound { layer: r.layer, datatype: r.datatype })?;
        let exp = step.exposure.as_ref().ok_or_else(|| MdpError::MissingExposure(step.name.clone()))?;
        if !(exp.dose > 0.0) {
            return Err(MdpError::InvalidDose { step: step.name.clone(), dose: exp.dose });
        }
        entries.push(JobEntry {
            reticle_id: r.id.clone(),
            process_step: step.name.clone(),
            step_order: step.step_order,
            lithography: step.lithography,
            exposure_dose: exp.dose,
            dose_unit: step.lithography.dose_unit().to_string(),
            focus_offset_nm: exp.focus_offset_nm,
            alignment_strategy: exp.alignment_strategy.clone(),
            step_pitch_mm: [plan.pitch_nm[0] as f64 / 1e6, plan.pitch_nm[1] as f64 / 1e6],
            site_count: plan.sites.len(),
            sites_ref: "wafer_plan.json#/sites".into(),
            trap_file: r.trap_file.clone(),
            checksum: r.checksum.clone(),
        });
    }
    entries.sort_by(|a, b| (a.step_order, &a.reticle_id).cmp(&(b.step_order, &b.reticle_id)));
    Ok(JobDeck {
        schema_version: JOBDECK_SCHEMA_VERSION,
        wafer_diameter_mm: plan.wafer.diameter_mm,
        grid_offset_mm: [plan.grid_offset_nm[0] as f64 / 1e6, plan.grid_offset_nm[1] as f64 / 1e6],
        entries,
        reticles: reticles.to_vec(),
    })
}
