// SPDX-License-Identifier: Apache-2.0

//! PDK rule decks and process stacks loaded from versioned JSON.

mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use validate::{validate_pdk, Gap, ValidationReport};

pub const SCHEMA_VERSION: u32 = 1;

pub const QEDA_JSON: &str = include_str!("../../../../pdks/qeda.json");
pub const CMC_JSON: &str = include_str!("../../../../pdks/cmc.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Ground,
    CpwConductor,
    JjBottom,
    JjTop,
    JjLead,
    AirbridgePad,
    AirbridgeSpan,
    Wiring,
    ChipOutline,
    Scribe,
    Text,
}

impl Purpose {
    pub const ALL: [Purpose; 11] = [
        Purpose::Ground,
        Purpose::CpwConductor,
        Purpose::JjBottom,
        Purpose::JjTop,
        Purpose::JjLead,
        Purpose::AirbridgePad,
        Purpose::AirbridgeSpan,
        Purpose::Wiring,
        Purpose::ChipOutline,
        Purpose::Scribe,
        Purpose::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Ground => "ground",
            Purpose::CpwConductor => "cpw_conductor",
            Purpose::JjBottom => "jj_bottom",
            Purpose::JjTop => "jj_top",
            Purpose::JjLead => "jj_lead",
            Purpose::AirbridgePad => "airbridge_pad",
            Purpose::AirbridgeSpan => "airbridge_span",
            Purpose::Wiring => "wiring",
            Purpose::ChipOutline => "chip_outline",
            Purpose::Scribe => "scribe",
            Purpose::Text => "text",
        }
    }

    /// Geometry subject to edge clearance and the tape-out bounding-box check.
    pub fn is_functional(self) -> bool {
        !matches!(self, Purpose::ChipOutline | Purpose::Scribe | Purpose::Text)
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
}

impl RuleId {
    pub const ALL: [RuleId; 9] =
        [RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4, RuleId::R5, RuleId::R6, RuleId::R7, RuleId::R8, RuleId::R9];

    pub fn kind(self) -> RuleKind {
        match self {
            RuleId::R1 => RuleKind::SpacingBetweenPurposes,
            RuleId::R2 | RuleId::R4 => RuleKind::MinWidth,
            RuleId::R3 => RuleKind::OverlapMargin,
            RuleId::R5 => RuleKind::RangeSpan,
            RuleId::R6 => RuleKind::MinPad,
            RuleId::R7 => RuleKind::EdgeClearance,
            RuleId::R8 => RuleKind::SameLayerSpacing,
            RuleId::R9 => RuleKind::Continuity,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    SpacingBetweenPurposes,
    MinWidth,
    OverlapMargin,
    RangeSpan,
    MinPad,
    EdgeClearance,
    SameLayerSpacing,
    Continuity,
}

/// Single threshold or an inclusive two-sided range, in nm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Single(i64),
    Range([i64; 2]),
}

type Extra = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPurpose {
    pub gds_layer: u16,
    pub gds_datatype: u16,
    pub purpose: Purpose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub id: RuleId,
    pub kind: RuleKind,
    pub purposes: Vec<Purpose>,
    pub threshold_nm: Threshold,
    /// R9 only: widest ground-edge separation still examined as a slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_max_nm: Option<i64>,
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

impl RuleSpec {
    pub fn single(&self) -> i64 {
        match self.threshold_nm {
            Threshold::Single(v) => v,
            Threshold::Range([lo, _]) => lo,
        }
    }

    pub fn range(&self) -> [i64; 2] {
        match self.threshold_nm {
            Threshold::Single(v) => [v, v],
            Threshold::Range(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lithography {
    None,
    Optical,
    Ebeam,
    Oxidation,
}

impl Lithography {
    /// Patterned by a mask or direct write, and so gets a reticle.
    pub fn is_patterned(self) -> bool {
        matches!(self, Lithography::Optical | Lithography::Ebeam)
    }

    pub fn default_sigma_nm(self) -> Option<i64> {
        match self {
            Lithography::Optical => Some(500),
            Lithography::Ebeam => Some(50),
            _ => None,
        }
    }

    pub fn dose_unit(self) -> &'static str {
        match self {
            Lithography::Ebeam => "uC/cm2",
            _ => "mJ/cm2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSpec {
    pub layer_pair: (Purpose, Purpose),
    pub lithography: Lithography,
    /// 3-sigma registration error; defaults from the lithography kind.
    #[serde(default)]
    pub sigma_align_nm: Option<i64>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

impl AlignmentSpec {
    pub fn sigma(&self) -> i64 {
        self.sigma_align_nm.or(self.lithography.default_sigma_nm()).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Material {
    #[serde(rename = "sapphire")]
    Sapphire,
    Nb,
    Al,
    AlOx,
    #[serde(rename = "HR-Si")]
    HrSi,
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Material::Sapphire => "sapphire",
            Material::Nb => "Nb",
            Material::Al => "Al",
            Material::AlOx => "AlOx",
            Material::HrSi => "HR-Si",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureDefaults {
    /// mJ/cm² for optical layers, µC/cm² for e-beam layers.
    pub dose: f64,
    #[serde(default)]
    pub focus_offset_nm: i64,
    pub alignment_strategy: String,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessLayer {
    pub step_order: u32,
    pub name: String,
    /// Alternatives ("Nb or Al") are listed in order of preference.
    pub materials: Vec<Material>,
    pub thickness_nm: [f64; 2],
    pub lithography: Lithography,
    pub function: String,
    #[serde(default)]
    pub gds_bindings: Vec<(u16, u16)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_permittivity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposure: Option<ExposureDefaults>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub db_unit_nm: u32,
    pub user_unit_m: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { db_unit_nm: 1, user_unit_m: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdkRuleSet {
    pub name: String,
    pub source: String,
    pub units: Units,
    pub layer_map: Vec<LayerPurpose>,
    pub rules: Vec<RuleSpec>,
    pub alignment: Vec<AlignmentSpec>,
}

impl PdkRuleSet {
    pub fn rule(&self, id: RuleId) -> Option<&RuleSpec> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn enabled_rule(&self, id: RuleId) -> Option<&RuleSpec> {
        self.rule(id).filter(|r| r.enabled)
    }

    pub fn purpose_of(&self, layer: u16, datatype: u16) -> Option<Purpose> {
        self.layer_map.iter().find(|l| l.gds_layer == layer && l.gds_datatype == datatype).map(|l| l.purpose)
    }

    pub fn layers_for(&self, p: Purpose) -> Vec<(u16, u16)> {
        self.layer_map.iter().filter(|l| l.purpose == p).map(|l| (l.gds_layer, l.gds_datatype)).collect()
    }

    /// First (layer, datatype) carrying purpose `p`.
    pub fn layer_of(&self, p: Purpose) -> Option<(u16, u16)> {
        self.layers_for(p).first().copied()
    }

    pub fn alignment_for(&self, a: Purpose, b: Purpose) -> Option<&AlignmentSpec> {
        self.alignment.iter().find(|s| s.layer_pair == (a, b) || s.layer_pair == (b, a))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessStack {
    pub layers: Vec<ProcessLayer>,
    pub substrate_permittivity: f64,
}

impl ProcessStack {
    pub fn layer_for_binding(&self, layer: u16, datatype: u16) -> Option<&ProcessLayer> {
        self.layers.iter().find(|l| l.gds_bindings.contains(&(layer, datatype)))
    }

    pub fn by_name(&self, name: &str) -> Option<&ProcessLayer> {
        self.layers.iter().find(|l| l.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pdk {
    pub rules: PdkRuleSet,
    pub stack: ProcessStack,
    /// Unknown fields, reported but not fatal.
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum PdkError {
    #[error("PDK schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("rule {0} appears more than once")]
    DuplicateRule(RuleId),
    #[error("rule {rule}: {message}")]
    Rule { rule: RuleId, message: String },
    #[error("layer map: {0}")]
    LayerMap(String),
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("process stack: {0}")]
    Stack(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Deserialize)]
struct Document {
    #[allow(dead_code)]
    schema_version: u32,
    name: String,
    #[serde(default)]
    source: String,
    #[serde(default)]
    units: Units,
    layer_map: Vec<LayerPurpose>,
    rules: Vec<RuleSpec>,
    #[serde(default)]
    alignment: Vec<AlignmentSpec>,
    stack: Vec<ProcessLayer>,
    #[serde(flatten)]
    extra: Extra,
}

fn extra_warnings(prefix: &str, extra: &Extra, out: &mut Vec<String>) {
    for k in extra.keys() {
        out.push(format!("unknown field {prefix}.{k} ignored"));
    }
}

fn check_rule(r: &RuleSpec) -> Result<(), PdkError> {
    let err = |message: String| PdkError::Rule { rule: r.id, message };
    if r.kind != r.id.kind() {
        return Err(err(format!("kind must be {:?}", r.id.kind())));
    }
    match (r.id, r.threshold_nm) {
        (RuleId::R5, Threshold::Single(_)) => {
            return Err(err("threshold_nm must be a [min, max] range".into()));
        }
        (RuleId::R5, Threshold::Range([lo, hi])) => {
            if lo <= 0 || hi < lo {
                return Err(err(format!("range [{lo}, {hi}] must satisfy 0 < min <= max")));
            }
        }
        (_, Threshold::Range(_)) => return Err(err("threshold_nm must be a single value".into())),
        (_, Threshold::Single(v)) => {
            if v <= 0 {
                return Err(err(format!("threshold {v} must be positive")));
            }
        }
    }
    if let Some(s) = r.slot_max_nm {
        if s <= 0 {
            return Err(err(format!("slot_max_nm {s} must be positive")));
        }
    }
    if r.purposes.is_empty() {
        return Err(err("purposes must not be empty".into()));
    }
    Ok(())
}

fn check_stack(layers: &[ProcessLayer]) -> Result<f64, PdkError> {
    let err = |m: String| PdkError::Stack(m);
    let mut orders: Vec<u32> = layers.iter().map(|l| l.step_order).collect();
    orders.sort_unstable();
    if orders.iter().enumerate().any(|(i, &o)| o != i as u32) {
        return Err(err(format!("step_order values {orders:?} must be contiguous from 0")));
    }
    let substrates: Vec<&ProcessLayer> = layers.iter().filter(|l| l.step_order == 0).collect();
    let substrate = substrates[0];
    if substrate.lithography != Lithography::None {
        return Err(err(format!("substrate {} must have lithography none", substrate.name)));
    }
    if let Some(l) = layers.iter().find(|l| l.step_order != 0 && l.lithography == Lithography::None) {
        return Err(err(format!("{} has lithography none but is not the substrate", l.name)));
    }
    let mut seen = BTreeSet::new();
    for l in layers {
        if l.materials.is_empty() {
            return Err(err(format!("{} lists no material", l.name)));
        }
        let [lo, hi] = l.thickness_nm;
        if !(lo > 0.0 && lo <= hi) {
            return Err(err(format!("{} thickness [{lo}, {hi}] must satisfy 0 < min <= max", l.name)));
        }
        for b in &l.gds_bindings {
            if !seen.insert(*b) {
                return Err(err(format!("GDS binding {b:?} used by more than one layer")));
            }
        }
    }
    Ok(substrate.relative_permittivity.unwrap_or(10.0))
}

/// Parses and validates a PDK document.
pub fn load_pdk(text: &str) -> Result<Pdk, PdkError> {
    let schema = |e: serde_path_to_error::Error<serde_json::Error>| PdkError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    };
    let value: Value = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(text)).map_err(schema)?;
    match value.get("schema_version").map(|v| v.as_u64()) {
        None => return Err(PdkError::Schema { path: "schema_version".into(), message: "missing field".into() }),
        Some(Some(v)) if v == SCHEMA_VERSION as u64 => {}
        Some(Some(v)) => return Err(PdkError::Version(v as u32)),
        Some(None) => {
            return Err(PdkError::Schema { path: "schema_version".into(), message: "must be an unsigned integer".into() })
        }
    }
    let doc: Document = serde_path_to_error::deserialize(value).map_err(schema)?;

    let mut warnings = Vec::new();
    extra_warnings("", &doc.extra, &mut warnings);
    for (i, l) in doc.layer_map.iter().enumerate() {
        extra_warnings(&format!("layer_map[{i}]"), &l.extra, &mut warnings);
    }
    for (i, r) in doc.rules.iter().enumerate() {
        extra_warnings(&format!("rules[{i}]"), &r.extra, &mut warnings);
    }
    for (i, a) in doc.alignment.iter().enumerate() {
        extra_warnings(&format!("alignment[{i}]"), &a.extra, &mut warnings);
    }
    for (i, l) in doc.stack.iter().enumerate() {
        extra_warnings(&format!("stack[{i}]"), &l.extra, &mut warnings);
        if let Some(e) = &l.exposure {
            extra_warnings(&format!("stack[{i}].exposure"), &e.extra, &mut warnings);
        }
    }

    let mut pairs = BTreeSet::new();
    for l in &doc.layer_map {
        if !pairs.insert((l.gds_layer, l.gds_datatype)) {
            return Err(PdkError::LayerMap(format!("({}, {}) mapped twice", l.gds_layer, l.gds_datatype)));
        }
    }
    let outlines = doc.layer_map.iter().filter(|l| l.purpose == Purpose::ChipOutline).count();
    if outlines != 1 {
        return Err(PdkError::LayerMap(format!("chip_outline must map to exactly one pair, found {outlines}")));
    }
    let mut ids = BTreeSet::new();
    for r in &doc.rules {
        if !ids.insert(r.id) {
            return Err(PdkError::DuplicateRule(r.id));
        }
        check_rule(r)?;
    }
    for a in &doc.alignment {
        if !a.lithography.is_patterned() {
            return Err(PdkError::Alignment(format!("{:?} pair must use optical or ebeam lithography", a.layer_pair)));
        }
        if a.sigma() <= 0 {
            return Err(PdkError::Alignment(format!("{:?} sigma must be positive", a.layer_pair)));
        }
    }
    if doc.stack.is_empty() {
        return Err(PdkError::Stack("stack is empty".into()));
    }
    if doc.units.db_unit_nm == 0 || !(doc.units.user_unit_m > 0.0) {
        return Err(PdkError::Schema { path: "units".into(), message: "units must be positive".into() });
    }
    let substrate_permittivity = check_stack(&doc.stack)?;
    let mut layers = doc.stack;
    layers.sort_by_key(|l| l.step_order);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Pdk {
        rules: PdkRuleSet {
            name: doc.name,
            source: doc.source,
            units: doc.units,
            layer_map: doc.layer_map,
            rules: doc.rules,
            alignment: doc.alignment,
        },
        stack: ProcessStack { layers, substrate_permittivity },
        warnings,
    })
}

pub fn load_pdk_file(path: &Path) -> Result<Pdk, PdkError> {
    let text = std::fs::read_to_string(path).map_err(|source| PdkError::Io { path: path.display().to_string(), source })?;
    load_pdk(&text)
}

/// One of the shipped decks by name.
pub fn builtin(name: &str) -> Option<Pdk> {
    let text = match name {
        "qeda" => QEDA_JSON,
        "cmc" => CMC_JSON,
        _ => return None,
    };
    Some(load_pdk(text).expect("shipped deck must load"))
}
