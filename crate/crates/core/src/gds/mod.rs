// SPDX-License-Identifier: Apache-2.0

//! GDSII stream reading, writing and hierarchy flattening.

mod flatten;
mod model;
pub mod record;
mod reader;
mod writer;

use thiserror::Error;

pub use flatten::{flatten, flatten_top, resolve_trace, FlatLayout, FlatPolygon, FlatText, Reject, RejectReason};
pub use model::{ArraySpec, Cell, CellRef, Element, Layout, Shape, Transform};
pub use reader::parse_gds;
pub use writer::write_gds;

fn at(offset: &Option<usize>) -> String {
    offset.map(|o| format!(" at byte {o}")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum GdsError {
    #[error("truncated record at byte {offset}")]
    Truncated { offset: usize },
    #[error("missing {record} record{}", at(.offset))]
    Missing { record: &'static str, offset: Option<usize> },
    #[error("unexpected {record} record at byte {offset}")]
    Unexpected { record: &'static str, offset: usize },
    #[error("invalid data{}: {detail}", at(.offset))]
    Invalid { offset: Option<usize>, detail: String },
    #[error("cell {cell} references undefined cell {target}{}", at(.offset))]
    UndefinedCell { cell: String, target: String, offset: Option<usize> },
    #[error("cyclic cell references: {}{}", .cycle.join(" -> "), at(.offset))]
    Cycle { cycle: Vec<String>, offset: Option<usize> },
    #[error("unknown top cell {0:?}")]
    UnknownTop(String),
    #[error("database unit of {0} m is not a whole number of nanometres")]
    NonIntegralUnit(f64),
    #[error("coordinate {value} in cell {cell} does not fit in 32 bits")]
    Overflow { cell: String, value: i64 },
}

impl GdsError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            GdsError::Truncated { offset } | GdsError::Unexpected { offset, .. } => Some(*offset),
            GdsError::Missing { offset, .. }
            | GdsError::Invalid { offset, .. }
            | GdsError::UndefinedCell { offset, .. }
            | GdsError::Cycle { offset, .. } => *offset,
            _ => None,
        }
    }
}
