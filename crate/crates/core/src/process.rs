// SPDX-License-Identifier: Apache-2.0

//! Layer-to-step mapping, registration budgets and the junction physics chain.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gds::FlatLayout;
use crate::geometry::{interiors_intersect, shifted_overlap_areas, Polygon, Rect};
use crate::pdk::{AlignmentSpec, Lithography, Material, PdkRuleSet, ProcessStack, Purpose};

pub const FLUX_QUANTUM_WB: f64 = 2.067833848e-15;
pub const PLANCK_JS: f64 = 6.62607015e-34;

/// Largest tolerated relative critical-current deviation.
pub const IC_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ProcessError {
    #[error("layers not bound to any process step: {}", fmt_pairs(.0))]
    Orphans(Vec<(u16, u16)>),
    #[error("electrodes do not overlap at zero shift")]
    NoOverlap,
    #[error("csv: {0}")]
    Csv(String),
}

fn fmt_pairs(v: &[(u16, u16)]) -> String {
    v.iter().map(|(l, d)| format!("({l}, {d})")).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepEntry {
    pub step_order: u32,
    pub name: String,
    pub materials: Vec<Material>,
    pub thickness_nm: [f64; 2],
    pub lithography: Lithography,
    pub bindings: Vec<(u16, u16)>,
    pub polygon_count: usize,
    pub total_area_um2: f64,
}

/// Process mapping table, one entry per stack layer in step order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepPlan {
    pub entries: Vec<StepEntry>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|")
}

impl StepPlan {
    /// CSV rendering. Multi-valued cells (alternate materials, several
    /// bindings) are joined with `|`; bindings line up position by position.
    pub fn to_csv(&self) -> Result<String, ProcessError> {
        let err = |e: csv::Error| ProcessError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "step_order",
            "name",
            "material",
            "thickness_nm",
            "lithography",
            "gds_layer",
            "gds_datatype",
            "polygon_count",
            "total_area_um2",
        ])
        .map_err(err)?;
        for e in &self.entries {
            let lith = serde_json::to_value(e.lithography).expect("enum serializes");
            let layers: Vec<u16> = e.bindings.iter().map(|b| b.0).collect();
            let dts: Vec<u16> = e.bindings.iter().map(|b| b.1).collect();
            w.write_record([
                e.step_order.to_string(),
                e.name.clone(),
                join(&e.materials),
                format!("{}-{}", e.thickness_nm[0], e.thickness_nm[1]),
                lith.as_str().unwrap_or_default().to_string(),
                join(&layers),
                join(&dts),
                e.polygon_count.to_string(),
                format!("{:.6}", e.total_area_um2),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| ProcessError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

pub fn map_layers(flat: &FlatLayout, stack: &ProcessStack) -> Result<StepPlan, ProcessError> {
    let orphans: Vec<(u16, u16)> = flat
        .populated_layers()
        .into_iter()
        .filter(|&(l, d)| stack.layer_for_binding(l, d).is_none())
        .collect();
    if !orphans.is_empty() {
        return Err(ProcessError::Orphans(orphans));
    }
    let mut layers: Vec<_> = stack.layers.iter().collect();
    layers.sort_by_key(|l| l.step_order);
    let entries = layers
        .into_iter()
        .map(|l| {
            let polys: Vec<_> = flat.polygons.iter().filter(|p| l.gds_bindings.contains(&(p.layer, p.datatype))).collect();
            StepEntry {
                step_order: l.step_order,
                name: l.name.clone(),
                materials: l.materials.clone(),
                thickness_nm: l.thickness_nm,
                lithography: l.lithography,
                bindings: l.gds_bindings.clone(),
                polygon_count: polys.len(),
                total_area_um2: polys.iter().fold(0.0, |a, p| a + p.polygon.area()) / 1e6,
            }
        })
        .collect();
    Ok(StepPlan { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationBudget {
    pub layer_pair: (Purpose, Purpose),
    pub o_design_nm: i64,
    pub sigma_align_nm: i64,
    pub o_min_nm: i64,
    pub feasible: bool,
}

pub fn registration_budget(o_design_nm: i64, alignment: &AlignmentSpec) -> RegistrationBudget {
    let sigma = alignment.sigma();
    let o_min = o_design_nm - sigma;
    RegistrationBudget {
        layer_pair: alignment.layer_pair,
        o_design_nm,
        sigma_align_nm: sigma,
        o_min_nm: o_min,
        feasible: o_min > 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapFinding {
    pub subjects: [String; 2],
    pub location: Rect,
    /// Shorter side of the overlap's bounding box.
    pub extent_nm: i64,
    pub required_nm: i64,
}

/// The budget as an interlayer rule: every overlapping pair across the
/// purpose pair must overlap by at least `o_min` along both axes.
pub fn check_overlap_extent(flat: &FlatLayout, pdk: &PdkRuleSet, budget: &RegistrationBudget) -> Vec<OverlapFinding> {
    let (pa, pb) = budget.layer_pair;
    let on = |p: Purpose| -> Vec<&crate::gds::FlatPolygon> {
        flat.polygons.iter().filter(|fp| pdk.purpose_of(fp.layer, fp.datatype) == Some(p)).collect()
    };
    let (a, b) = (on(pa), on(pb));
    let mut out = Vec::new();
    for x in &a {
        for y in &b {
            if !interiors_intersect(&x.polygon, &y.polygon) {
                continue;
            }
            let r = x.polygon.bbox().intersection(&y.polygon.bbox()).expect("interiors intersect");
            let extent = r.width().min(r.height());
            if extent < budget.o_min_nm {
                out.push(OverlapFinding {
                    subjects: [x.trace.clone(), y.trace.clone()],
                    location: r,
                    extent_nm: extent,
                    required_nm: budget.o_min_nm,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JJParams {
    /// Critical current density J_c in µA/µm².
    pub critical_current_density: f64,
    /// Charging energy E_C/h in MHz.
    pub charging_energy_over_h_mhz: f64,
    pub flux_quantum: f64,
    pub planck: f64,
}

impl JJParams {
    pub fn new(jc_ua_per_um2: f64, ec_over_h_mhz: f64) -> Self {
        JJParams {
            critical_current_density: jc_ua_per_um2,
            charging_energy_over_h_mhz: ec_over_h_mhz,
            flux_quantum: FLUX_QUANTUM_WB,
            planck: PLANCK_JS,
        }
    }
}

impl Default for JJParams {
    fn default() -> Self {
        JJParams::new(0.5, 250.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JJResult {
    pub critical_current_a: f64,
    pub ej_over_h_ghz: f64,
    pub f01_ghz: f64,
}

pub fn jj_chain(area_um2: f64, p: &JJParams) -> JJResult {
    let ic = p.critical_current_density * area_um2 * 1e-6;
    let ej_over_h = ic * p.flux_quantum / (2.0 * PI) / p.planck;
    let ec_over_h = p.charging_energy_over_h_mhz * 1e6;
    let f01 = (8.0 * ej_over_h * ec_over_h).sqrt();
    JJResult { critical_current_a: ic, ej_over_h_ghz: ej_over_h / 1e9, f01_ghz: f01 / 1e9 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    /// max |ΔA/A| over the shift grid, equal to max |ΔI_c/I_c|.
    pub max_relative_deviation: f64,
    pub ok: bool,
}

pub fn jj_misalignment_sensitivity(bottom: &Polygon, top: &Polygon, tol_nm: i64) -> Result<Sensitivity, ProcessError> {
    let areas = shifted_overlap_areas(bottom, top, tol_nm);
    let nominal = areas[4];
    if nominal <= 0.0 {
        return Err(ProcessError::NoOverlap);
    }
    let dev = areas.iter().map(|a| (a - nominal).abs()).fold(0.0, f64::max) / nominal;
    Ok(Sensitivity { max_relative_deviation: dev, ok: dev <= IC_TOLERANCE })
}
