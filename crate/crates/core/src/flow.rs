// SPDX-License-Identifier: Apache-2.0

//! The stages chained in order: verify, map, plan, fracture, gate, export.
//! Each stage function is what the matching CLI command runs, so a full
//! pipeline run and a sequence of single commands produce the same files.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::drc::{run_drc_with, DrcOptions, ViolationReport};
use crate::gds::{flatten, FlatLayout, Layout};
use crate::mdp::{
    build_job_deck, build_reticles, export_package, fracture_layer, tapeout_check, JobDeck, Manifest, MdpError,
    PackageInputs, ReticleData, TapeoutReport, TrapezoidSet,
};
use crate::pdk::{Pdk, Purpose};
use crate::process::{check_overlap_extent, map_layers, registration_budget, OverlapFinding, ProcessError, RegistrationBudget, StepPlan};
use crate::waferplan::{emit_wafer_layout, plan_wafer, standard_pcm_cells, DieSpec, ScribeSpec, WaferError, WaferPlan, WaferSpec};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Wafer(#[from] WaferError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub wafer: WaferSpec,
    pub scribe_mm: f64,
    /// Die size for wafer planning; the chip outline when absent.
    pub die_mm: Option<[f64; 2]>,
    pub drc: DrcOptions,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { wafer: WaferSpec::default(), scribe_mm: 0.2, die_mm: None, drc: DrcOptions::default() }
    }
}

pub fn flatten_layout(layout: &Layout) -> Result<FlatLayout, FlowError> {
    flatten(layout, &layout.top_cell).map_err(|e| FlowError::Layout(e.to_string()))
}

pub fn verify(flat: &FlatLayout, pdk: &Pdk, cfg: &FlowConfig) -> ViolationReport {
    run_drc_with(flat, &pdk.rules, cfg.drc)
}

/// Registration budget per configured alignment pair, with `o_design` taken
/// as the smallest overlap extent the layout draws across that pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegistrationReport {
    pub budgets: Vec<RegistrationBudget>,
    pub findings: Vec<OverlapFinding>,
}

pub fn registration(flat: &FlatLayout, pdk: &Pdk) -> RegistrationReport {
    let mut budgets = Vec::new();
    let mut findings = Vec::new();
    for a in &pdk.rules.alignment {
        let (pa, pb) = a.layer_pair;
        let on = |p: Purpose| flat.polygons.iter().filter(move |fp| pdk.rules.purpose_of(fp.layer, fp.datatype) == Some(p));
        let mut o_design: Option<i64> = None;
        for x in on(pa) {
            for y in on(pb) {
                if let Some(r) = x.polygon.bbox().intersection(&y.polygon.bbox()) {
                    let e = r.width().min(r.height());
                    if e > 0 && crate::geometry::interiors_intersect(&x.polygon, &y.polygon) {
                        o_design = Some(o_design.map_or(e, |o| o.min(e)));
                    }
                }
            }
        }
        if let Some(o) = o_design {
            let b = registration_budget(o, a);
            findings.extend(check_overlap_extent(flat, &pdk.rules, &b));
            budgets.push(b);
        }
    }
    RegistrationReport { budgets, findings }
}

pub fn map(flat: &FlatLayout, pdk: &Pdk) -> Result<StepPlan, FlowError> {
    Ok(map_layers(flat, &pdk.stack)?)
}

/// Die outline rectangle, from the chip_outline layer or the layout bounds.
pub fn die_rect(flat: &FlatLayout, pdk: &Pdk) -> crate::geometry::Rect {
    flat.polygons
        .iter()
        .find(|p| pdk.rules.purpose_of(p.layer, p.datatype) == Some(Purpose::ChipOutline))
        .map(|p| p.polygon.bbox())
        .unwrap_or(flat.bounds)
}

pub fn plan(layout: &Layout, flat: &FlatLayout, pdk: &Pdk, cfg: &FlowConfig) -> Result<(WaferPlan, Layout), FlowError> {
    let [w, h] = cfg.die_mm.unwrap_or_else(|| {
        let r = die_rect(flat, pdk);
        [r.width() as f64 / 1e6, r.height() as f64 / 1e6]
    });
    let die = DieSpec { width_mm: w, height_mm: h, outline_cell: layout.top_cell.clone() };
    let pcms = standard_pcm_cells();
    let scribe = ScribeSpec { lane_width_mm: cfg.scribe_mm, pcm_cells: pcms.iter().map(|c| c.name.clone()).collect() };
    let plan = plan_wafer(&cfg.wafer, &die, &scribe)?;
    let wafer = emit_wafer_layout(&plan, layout, &pcms)?;
    Ok((plan, wafer))
}

/// Fractures every populated layer bound to a patterned process step.
pub fn fracture(flat: &FlatLayout, pdk: &Pdk) -> Result<Vec<TrapezoidSet>, FlowError> {
    let mut sets = Vec::new();
    for (l, d) in flat.populated_layers() {
        let patterned = pdk.stack.layer_for_binding(l, d).is_some_and(|s| s.lithography.is_patterned());
        if patterned {
            sets.push(fracture_layer(flat, l, d)?);
        }
    }
    Ok(sets)
}

pub fn reticles_and_deck(
    flat: &FlatLayout,
    pdk: &Pdk,
    sets: &[TrapezoidSet],
    plan: &WaferPlan,
) -> Result<(Vec<ReticleData>, JobDeck), FlowError> {
    let field = die_rect(flat, pdk);
    let reticles = build_reticles(sets, field, &pdk.stack)?;
    let deck = build_job_deck(plan, &reticles, &pdk.stack)?;
    Ok((reticles, deck))
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone)]
pub struct FlowOutputs {
    pub flat: FlatLayout,
    pub drc: ViolationReport,
    pub registration: RegistrationReport,
    pub step_plan: StepPlan,
    pub plan: WaferPlan,
    pub wafer: Layout,
    pub traps: Vec<TrapezoidSet>,
    pub reticles: Vec<ReticleData>,
    pub jobdeck: JobDeck,
    pub tapeout: TapeoutReport,
}

impl FlowOutputs {
    /// True when nothing blocks export.
    pub fn clean(&self) -> bool {
        self.drc.is_clean() && self.drc.errors.is_empty() && self.tapeout.overall
    }
}

pub fn run_stages(layout: &Layout, pdk: &Pdk, cfg: &FlowConfig) -> Result<FlowOutputs, FlowError> {
    let flat = flatten_layout(layout)?;
    let drc = verify(&flat, pdk, cfg);
    let registration = registration(&flat, pdk);
    let step_plan = map(&flat, pdk)?;
    let (plan, wafer) = plan(layout, &flat, pdk, cfg)?;
    let traps = fracture(&flat, pdk)?;
    let (reticles, jobdeck) = reticles_and_deck(&flat, pdk, &traps, &plan)?;
    let tapeout = tapeout_check(layout, &pdk.rules);
    Ok(FlowOutputs { flat, drc, registration, step_plan, plan, wafer, traps, reticles, jobdeck, tapeout })
}

pub fn export(layout: &Layout, out: &FlowOutputs, dir: &Path, waiver: Option<&str>) -> Result<Manifest, FlowError> {
    let inputs = PackageInputs {
        layout,
        wafer: &out.wafer,
        drc: &out.drc,
        tapeout: &out.tapeout,
        step_plan: &out.step_plan,
        plan: &out.plan,
        traps: &out.traps,
        jobdeck: &out.jobdeck,
    };
    Ok(export_package(&inputs, dir, waiver)?)
}
