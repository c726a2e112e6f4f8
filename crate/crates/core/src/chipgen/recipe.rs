// SPDX-License-Identifier: Apache-2.0

//! Generator parameters. Lengths are µm unless the name says otherwise.

use serde::{Deserialize, Serialize};

/// Xmon cross with its junction at the tip of the lower arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XmonParams {
    /// Centre to arm tip.
    pub arm_length_um: f64,
    pub arm_width_um: f64,
    /// Ground clearance beyond the arm tips; the pocket is square.
    pub gap_um: f64,
    /// Side of the square junction overlap.
    pub jj_overlap_nm: i64,
    /// How far each electrode runs past the overlap.
    pub jj_margin_nm: i64,
    pub jj_lead_width_nm: i64,
}

impl Default for XmonParams {
    fn default() -> Self {
        XmonParams {
            arm_length_um: 120.0,
            arm_width_um: 24.0,
            gap_um: 24.0,
            jj_overlap_nm: 200,
            jj_margin_nm: 200,
            jj_lead_width_nm: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpwParams {
    pub conductor_width_um: f64,
    pub gap_um: f64,
}

impl Default for CpwParams {
    fn default() -> Self {
        CpwParams { conductor_width_um: 10.0, gap_um: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeParams {
    pub pad_um: f64,
    /// Clear distance between the two landing pads.
    pub pad_gap_um: f64,
    pub span_width_um: f64,
    /// Straight CPW runs get one bridge per pitch, at least one.
    pub pitch_um: f64,
    /// Runs this short or shorter are left unbridged.
    pub min_run_um: f64,
}

impl Default for BridgeParams {
    fn default() -> Self {
        BridgeParams { pad_um: 12.0, pad_gap_um: 60.0, span_width_um: 10.0, pitch_um: 700.0, min_run_um: 50.0 }
    }
}

/// Quarter-wave readout resonator meandered inside a pocket above the qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonatorParams {
    pub base_frequency_ghz: f64,
    pub frequency_step_ghz: f64,
    /// Frequencies repeat after this many qubits.
    pub frequency_cycle: usize,
    /// Seeded uniform jitter added to each target.
    pub jitter_mhz: f64,
    pub pocket_width_um: f64,
    pub legs: usize,
    pub leg_pitch_um: f64,
    /// Conductor to pocket wall.
    pub margin_um: f64,
    /// Open end to the Xmon arm.
    pub coupling_gap_um: f64,
}

impl Default for ResonatorParams {
    fn default() -> Self {
        ResonatorParams {
            base_frequency_ghz: 6.0,
            frequency_step_ghz: 0.1,
            frequency_cycle: 8,
            jitter_mhz: 10.0,
            pocket_width_um: 460.0,
            legs: 13,
            leg_pitch_um: 30.0,
            margin_um: 15.0,
            coupling_gap_um: 20.0,
        }
    }
}

/// Floating coupling bar in its own pocket between two qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplerParams {
    pub pocket_um: f64,
    pub bar_length_um: f64,
    pub bar_width_um: f64,
}

impl Default for CouplerParams {
    fn default() -> Self {
        CouplerParams { pocket_um: 160.0, bar_length_um: 120.0, bar_width_um: 24.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeedlineParams {
    /// Ground between the feedline gap and the resonator pockets.
    pub ground_strip_um: f64,
    pub launch_pad_um: f64,
    pub launch_gap_um: f64,
}

impl Default for FeedlineParams {
    fn default() -> Self {
        FeedlineParams { ground_strip_um: 40.0, launch_pad_um: 150.0, launch_gap_um: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementParams {
    /// Ground between unrelated openings, and around the content.
    pub clearance_um: f64,
    /// Die edge to ground plane.
    pub ground_inset_um: f64,
    pub qubit_pitch_um: f64,
    /// Centre to vertex of the 4-qubit diamond.
    pub diamond_offset_um: f64,
    /// Resonator stub length for the top and bottom diamond qubits.
    pub diamond_stub_um: f64,
    /// Side of the empty pocket reserved for injected test structures.
    pub test_site_um: f64,
}

impl Default for PlacementParams {
    fn default() -> Self {
        PlacementParams {
            clearance_um: 80.0,
            ground_inset_um: 250.0,
            qubit_pitch_um: 600.0,
            diamond_offset_um: 600.0,
            diamond_stub_um: 150.0,
            test_site_um: 400.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipRecipe {
    pub xmon: XmonParams,
    pub cpw: CpwParams,
    pub bridge: BridgeParams,
    pub resonator: ResonatorParams,
    pub coupler: CouplerParams,
    pub feedline: FeedlineParams,
    pub placement: PlacementParams,
}

pub(crate) fn nm(um: f64) -> i64 {
    (um * 1000.0).round() as i64
}
