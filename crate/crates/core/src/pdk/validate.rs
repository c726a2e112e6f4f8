// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;

use super::{PdkRuleSet, ProcessStack, Purpose, RuleId};

/// A coverage hole that prevents a rule or process step from being honoured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub message: String,
    pub rules: Vec<RuleId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub gaps: Vec<Gap>,
    /// Informational findings that do not block use.
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.gaps.is_empty()
    }
}

/// Cross-checks a rule deck against its process stack.
pub fn validate_pdk(pdk: &PdkRuleSet, stack: &ProcessStack) -> ValidationReport {
    let mut report = ValidationReport::default();

    // One gap per unmapped purpose, naming every enabled rule that needs it.
    let mut needed: BTreeMap<Purpose, Vec<RuleId>> = BTreeMap::new();
    for r in pdk.rules.iter().filter(|r| r.enabled) {
        for &p in &r.purposes {
            if pdk.layers_for(p).is_empty() {
                needed.entry(p).or_default().push(r.id);
            }
        }
    }
    for (p, rules) in needed {
        let names: Vec<String> = rules.iter().map(|r| r.to_string()).collect();
        report.gaps.push(Gap { message: format!("purpose {p} has no layer but is required by {}", names.join(", ")), rules });
    }

    for layer in stack.layers.iter().filter(|l| l.lithography.is_patterned()) {
        let purposes: Vec<Purpose> =
            layer.gds_bindings.iter().filter_map(|&(l, d)| pdk.purpose_of(l, d)).collect();
        let covered = pdk
            .alignment
            .iter()
            .any(|a| purposes.contains(&a.layer_pair.0) || purposes.contains(&a.layer_pair.1));
        if !covered {
            report.gaps.push(Gap { message: format!("process layer {} has no alignment spec", layer.name), rules: vec![] });
        }
    }

    for layer in &stack.layers {
        for &(l, d) in &layer.gds_bindings {
            if pdk.purpose_of(l, d).is_none() {
                report.notes.push(format!("({l}, {d}) bound to {} is not in the layer map", layer.name));
            }
        }
    }
    let bridge_layers: Vec<&str> = stack
        .layers
        .iter()
        .filter(|l| {
            l.gds_bindings.iter().any(|&(g, d)| {
                matches!(pdk.purpose_of(g, d), Some(Purpose::AirbridgeSpan | Purpose::AirbridgePad))
            })
        })
        .map(|l| l.name.as_str())
        .collect();
    let has_bridge_rules = [RuleId::R5, RuleId::R6].iter().any(|&id| pdk.enabled_rule(id).is_some());
    if !bridge_layers.is_empty() && !has_bridge_rules {
        report.notes.push(format!(
            "deck {} defines no airbridge rules; layers {} are not checked for span or pad size",
            pdk.name,
            bridge_layers.join(", ")
        ));
    }
    for r in pdk.rules.iter().filter(|r| !r.enabled) {
        report.notes.push(format!("{} is present but not enforced", r.id));
    }
    report
}
