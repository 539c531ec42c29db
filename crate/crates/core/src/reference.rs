//! The 415 V, 1500 rpm reference machine and its fitted saturation constants.

use crate::perunit::{MachineParameters, TimeConstantOverrides};

/// Froelich constant `a` of the reference machine's magnetisation curve.
pub const FROELICH_A: f64 = 0.48366;
/// Froelich constant `b` of the reference machine's magnetisation curve.
pub const FROELICH_B: f64 = 0.3478;

/// Tabulated test parameters as (name, ohms, per unit).
pub const OHMIC_TABLE: [(&str, f64, f64); 9] = [
    ("Xd", 98.0679, 1.7085),
    ("Xd_p", 32.6032, 0.568),
    ("Xd_pp", 10.1598, 0.177),
    ("Xq", 56.42, 0.9831),
    ("Xq_p", 45.92, 0.8),
    ("Xq_pp", 30.3072, 0.528),
    ("Xls", 4.879, 0.085),
    ("Ra", 0.1722, 0.003),
    ("Rf", 1.722, 0.03),
];

pub fn machine() -> MachineParameters {
    MachineParameters {
        rated_line_voltage: 415.0,
        rated_current: 3.3,
        rated_speed: 1500.0,
        electrical_frequency: 50.0,
        ra: 0.003,
        rf: 0.03,
        xd: 1.7085,
        xd_p: 0.568,
        xd_pp: 0.177,
        xq: 0.9831,
        xq_p: 0.8,
        xq_pp: 0.528,
        xls: 0.085,
        field_base_voltage: 220.0,
        field_base_current: 0.7,
        inertia_constant: Some(3.5),
    }
}

/// Damper time constants for the reference machine.
///
/// These are not measured data. They are representative values for a small
/// salient-pole machine, chosen so the damper constants sit well below the
/// field constant.
pub fn example_time_constants() -> TimeConstantOverrides {
    TimeConstantOverrides {
        td0_pp: Some(0.015),
        tq0_p: Some(0.1),
        tq0_pp: Some(0.02),
        ..Default::default()
    }
}

/// Average output of an ideal three-phase bridge (1.35 V_LL) on the field base voltage.
pub fn default_rectifier_gain(p: &MachineParameters) -> f64 {
    1.35 * p.rated_line_voltage / p.field_base_voltage
}
