// SPDX-License-Identifier: Apache-2.0

//! Rule execution over a flat layout.
//!
//! Check counting: one check per polygon for width, pad and edge rules, per
//! candidate pair for spacing rules, per intersecting electrode pair for R3,
//! per span for R5, and per ground component plus per examined slot for R9.

mod continuity;
mod report;
mod rules;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gds::{FlatLayout, FlatPolygon};
use crate::geometry::{Rect, SpatialIndex};
use crate::pdk::{PdkRuleSet, Purpose, RuleId};

pub use report::{render_svg, render_text};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One geometric rule failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: RuleId,
    pub location: Rect,
    pub measured: i64,
    pub required: i64,
    /// "nm", "nm2", "ppm" or "count".
    pub unit: String,
    pub subjects: Vec<String>,
    pub message: String,
}

impl Violation {
    fn sort_key(&self) -> (RuleId, i64, i64, &[String]) {
        (self.rule_id, self.location.min.x, self.location.min.y, &self.subjects)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleStats {
    pub rule_id: RuleId,
    pub enabled: bool,
    pub checks: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub schema_version: u32,
    pub pdk: String,
    pub polygon_count: usize,
    pub total_checks: u64,
    pub candidate_pairs_examined: u64,
    pub violations: Vec<Violation>,
    pub stats: Vec<RuleStats>,
    /// Report-level problems such as a rule skipped for lack of a layer mapping.
    pub errors: Vec<String>,
    /// Wall time; kept out of the JSON so reports stay reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.errors.is_empty()
    }

    pub fn count(&self, rule: RuleId) -> usize {
        self.violations.iter().filter(|v| v.rule_id == rule).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// How spacing-style rules find candidate pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CandidateSource {
    /// R-tree queries with threshold-expanded bounds.
    #[default]
    Index,
    /// Every pair tested against the same expanded-bounds predicate.
    AllPairs,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DrcOptions {
    pub candidates: CandidateSource,
    /// Worker cap; `None` reads QFLOW_THREADS, falling back to rayon's default.
    pub threads: Option<usize>,
}

/// Threads requested through QFLOW_THREADS, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("QFLOW_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub(crate) struct RuleOutcome {
    pub violations: Vec<Violation>,
    pub checks: u64,
    pub pairs: u64,
}

impl RuleOutcome {
    fn new() -> Self {
        RuleOutcome { violations: Vec::new(), checks: 0, pairs: 0 }
    }
}

pub(crate) struct Ctx<'a> {
    pub flat: &'a FlatLayout,
    pub source: CandidateSource,
    /// Polygon ids (into `flat.polygons`) per purpose, ascending.
    pub by_purpose: BTreeMap<Purpose, Vec<usize>>,
    indexes: BTreeMap<Purpose, SpatialIndex>,
}

impl<'a> Ctx<'a> {
    fn new(flat: &'a FlatLayout, pdk: &PdkRuleSet, source: CandidateSource) -> Self {
        let mut by_purpose: BTreeMap<Purpose, Vec<usize>> = BTreeMap::new();
        for (i, p) in flat.polygons.iter().enumerate() {
            if let Some(purpose) = pdk.purpose_of(p.layer, p.datatype) {
                by_purpose.entry(purpose).or_default().push(i);
            }
        }
        let indexes = match source {
            CandidateSource::Index => by_purpose
                .iter()
                .map(|(&purpose, ids)| {
                    (purpose, SpatialIndex::new(ids.iter().map(|&i| (flat.polygons[i].polygon.bbox(), i))))
                })
                .collect(),
            CandidateSource::AllPairs => BTreeMap::new(),
        };
        Ctx { flat, source, by_purpose, indexes }
    }

    pub fn ids(&self, p: Purpose) -> &[usize] {
        self.by_purpose.get(&p).map_or(&[], |v| v.as_slice())
    }

    pub fn poly(&self, id: usize) -> &'a FlatPolygon {
        &self.flat.polygons[id]
    }

    pub fn bbox(&self, id: usize) -> Rect {
        self.flat.polygons[id].polygon.bbox()
    }

    /// Ids of purpose `p` whose bounds intersect `r` (closed), ascending.
    pub fn query(&self, p: Purpose, r: &Rect) -> Vec<usize> {
        match self.source {
            CandidateSource::Index => self.indexes.get(&p).map_or_else(Vec::new, |ix| ix.query(r)),
            CandidateSource::AllPairs => self.ids(p).iter().copied().filter(|&i| self.bbox(i).intersects(r)).collect(),
        }
    }

    /// Candidate pairs (a of `pa`, b of `pb`) whose bounds come within `expand`.
    /// For `pa == pb` each unordered pair appears once with a < b.
    pub fn pairs(&self, pa: Purpose, pb: Purpose, expand: i64) -> Vec<(usize, usize)> {
        let same = pa == pb;
        let mut out = Vec::new();
        for &a in self.ids(pa) {
            let q = self.bbox(a).expand(expand);
            for b in self.query(pb, &q) {
                if !same || a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Runs every enabled rule of `pdk` over `flat` with default options.
pub fn run_drc(flat: &FlatLayout, pdk: &PdkRuleSet) -> ViolationReport {
    run_drc_with(flat, pdk, DrcOptions::default())
}

pub fn run_drc_with(flat: &FlatLayout, pdk: &PdkRuleSet, opts: DrcOptions) -> ViolationReport {
    let start = Instant::now();
    let mut errors = Vec::new();
    let mut runnable = Vec::new();
    let mut stats = Vec::new();
    for id in RuleId::ALL {
        let Some(spec) = pdk.rule(id) else { continue };
        if !spec.enabled {
            stats.push(RuleStats { rule_id: id, enabled: false, checks: 0, violations: 0 });
            continue;
        }
        let missing: Vec<String> =
            spec.purposes.iter().filter(|p| pdk.layers_for(**p).is_empty()).map(|p| p.to_string()).collect();
        if !missing.is_empty() {
            errors.push(format!("{id} skipped: purpose {} has no layer mapping", missing.join(", ")));
            stats.push(RuleStats { rule_id: id, enabled: true, checks: 0, violations: 0 });
            continue;
        }
        runnable.push(spec.clone());
    }

    let ctx = Ctx::new(flat, pdk, opts.candidates);
    let exec = || -> Vec<(RuleId, Result<RuleOutcome, String>)> {
        runnable.par_iter().map(|spec| (spec.id, rules::run_rule(&ctx, spec))).collect()
    };
    let threads = opts.threads.or_else(env_threads);
    let results = match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(exec),
        None => exec(),
    };

    let mut violations = Vec::new();
    let mut pairs = 0;
    for (id, res) in results {
        match res {
            Ok(out) => {
                stats.push(RuleStats { rule_id: id, enabled: true, checks: out.checks, violations: out.violations.len() as u64 });
                pairs += out.pairs;
                violations.extend(out.violations);
            }
            Err(e) => {
                errors.push(format!("{id} skipped: {e}"));
                stats.push(RuleStats { rule_id: id, enabled: true, checks: 0, violations: 0 });
            }
        }
    }
    stats.sort_by_key(|s| s.rule_id);
    violations.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    ViolationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        pdk: pdk.name.clone(),
        polygon_count: flat.polygons.len(),
        total_checks: stats.iter().map(|s| s.checks).sum(),
        candidate_pairs_examined: pairs,
        violations,
        stats,
        errors,
        elapsed: start.elapsed(),
    }
}
