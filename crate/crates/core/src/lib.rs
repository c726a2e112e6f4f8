// SPDX-License-Identifier: Apache-2.0

pub mod gds;
pub mod mdp;
pub mod chipgen;
pub mod drc;
pub mod flow;
pub mod geometry;
pub mod pdk;
pub mod process;
pub mod waferplan;
