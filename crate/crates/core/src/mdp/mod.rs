// SPDX-License-Identifier: Apache-2.0

//! Mask data preparation: fracturing, reticles, job deck, tape-out gate
//! and the foundry package.

mod fracture;
mod package;
mod reticle;
mod tapeout;

use thiserror::Error;

use crate::geometry::Rect;

pub use fracture::{fracture_layer, parse_trap, write_trap, TrapezoidSet};
pub use package::{export_package, gate_failures, sha256_hex, verify_manifest, Manifest, ManifestEntry, PackageInputs};
pub use reticle::{build_job_deck, build_reticles, trapezoid_checksum, JobDeck, JobEntry, ReticleData};
pub use tapeout::{tapeout_check, TapeoutCheck, TapeoutReport, MAX_HIERARCHY_DEPTH};

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("({layer}, {datatype}) has no polygons to fracture")]
    EmptyLayer { layer: u16, datatype: u16 },
    #[error("({layer}, {datatype}) has invalid polygons: {}", polygons.join("; "))]
    InvalidPolygons { layer: u16, datatype: u16, polygons: Vec<String> },
    #[error("({layer}, {datatype}) is not bound to any process step")]
    Unbound { layer: u16, datatype: u16 },
    #[error("({layer}, {datatype}) shape {shape:?} lies outside the field {field:?}")]
    OutsideField { layer: u16, datatype: u16, shape: Rect, field: Rect },
    #[error("process step {0:?} has no exposure defaults")]
    MissingExposure(String),
    #[error("process step {step:?} has non-positive dose {dose}")]
    InvalidDose { step: String, dose: f64 },
    #[error("trap line {line}: {message}")]
    Trap { line: usize, message: String },
    #[error("package refused: {}", .0.join("; "))]
    Gate(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("gds: {0}")]
    Gds(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("manifest: {0}")]
    Manifest(String),
}
