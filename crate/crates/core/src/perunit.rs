//! Per-unit machine data and the internal parameters derived from it.
//!
//! The standard test data of a salient-pole machine (synchronous, transient
//! and sub-transient reactances on both axes, leakage reactance, stator and
//! field resistance) is inverted into the element reactances of the field
//! and damper branches, and into the open- and short-circuit time constants
//! consumed by the flux-linkage model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ParameterError, Violation};

/// Nameplate bases plus measured per-unit test parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineParameters {
    /// Line-to-line RMS voltage, V.
    pub rated_line_voltage: f64,
    /// RMS phase current, A.
    pub rated_current: f64,
    /// Mechanical speed, rpm.
    pub rated_speed: f64,
    /// Electrical frequency, Hz.
    #[serde(default = "default_frequency")]
    pub electrical_frequency: f64,
    #[serde(rename = "Ra")]
    pub ra: f64,
    #[serde(rename = "Rf")]
    pub rf: f64,
    #[serde(rename = "Xd")]
    pub xd: f64,
    #[serde(rename = "Xd_p")]
    pub xd_p: f64,
    #[serde(rename = "Xd_pp")]
    pub xd_pp: f64,
    #[serde(rename = "Xq")]
    pub xq: f64,
    #[serde(rename = "Xq_p")]
    pub xq_p: f64,
    #[serde(rename = "Xq_pp")]
    pub xq_pp: f64,
    #[serde(rename = "Xls")]
    pub xls: f64,
    /// Field base voltage, V.
    pub field_base_voltage: f64,
    /// Field base current, A.
    pub field_base_current: f64,
    /// Inertia constant, MJ/MVA. Parsed and ignored: speed is held constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia_constant: Option<f64>,
}

fn default_frequency() -> f64 {
    50.0
}

/// Stator base quantities implied by the nameplate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseQuantities {
    pub phase_voltage: f64,
    pub current: f64,
    pub impedance: f64,
    pub omega_e: f64,
}

impl BaseQuantities {
    pub fn from_machine(p: &MachineParameters) -> Result<Self, ConfigError> {
        if p.rated_current == 0.0 {
            return Err(ConfigError::ZeroBase { what: "rated_current" });
        }
        Ok(Self {
            phase_voltage: p.rated_line_voltage / 3f64.sqrt(),
            current: p.rated_current,
            impedance: p.rated_line_voltage / (3f64.sqrt() * p.rated_current),
            omega_e: 2.0 * PI * p.electrical_frequency,
        })
    }
}

/// Express `value` as a fraction of `base`.
pub fn to_per_unit(value: f64, base: f64) -> Result<f64, ConfigError> {
    if base == 0.0 {
        return Err(ConfigError::ZeroBase { what: "per-unit base" });
    }
    Ok(value / base)
}

/// Every violated plausibility rule of `p`. Empty when the data is usable.
pub fn validate(p: &MachineParameters) -> Vec<Violation> {
    let mut out = Vec::new();

    let finite = [
        ("rated_line_voltage", p.rated_line_voltage),
        ("rated_current", p.rated_current),
        ("rated_speed", p.rated_speed),
        ("electrical_frequency", p.electrical_frequency),
        ("Ra", p.ra),
        ("Rf", p.rf),
        ("Xd", p.xd),
        ("Xd_p", p.xd_p),
        ("Xd_pp", p.xd_pp),
        ("Xq", p.xq),
        ("Xq_p", p.xq_p),
        ("Xq_pp", p.xq_pp),
        ("Xls", p.xls),
        ("field_base_voltage", p.field_base_voltage),
        ("field_base_current", p.field_base_current),
    ];
    for (name, v) in finite {
        if !v.is_finite() {
            out.push(Violation::new(name, "finite", format!("{v} is not a finite number")));
        }
    }

    for (name, v) in [
        ("rated_line_voltage", p.rated_line_voltage),
        ("rated_current", p.rated_current),
        ("rated_speed", p.rated_speed),
        ("electrical_frequency", p.electrical_frequency),
        ("field_base_voltage", p.field_base_voltage),
        ("field_base_current", p.field_base_current),
    ] {
        if !(v > 0.0) {
            out.push(Violation::new(name, "rated quantity > 0", format!("{name} = {v}")));
        }
    }
    for (name, v) in [("Ra", p.ra), ("Rf", p.rf)] {
        if !(v > 0.0) {
            out.push(Violation::new(name, "resistance > 0", format!("{name} = {v}")));
        }
    }
    if !(p.xls > 0.0) {
        out.push(Violation::new("Xls", "Xls > 0", format!("Xls = {}", p.xls)));
    }

    let chains = [
        (
            "reactance chain d-axis",
            [("Xd", p.xd), ("Xd_p", p.xd_p), ("Xd_pp", p.xd_pp), ("Xls", p.xls)],
        ),
        (
            "reactance chain q-axis",
            [("Xq", p.xq), ("Xq_p", p.xq_p), ("Xq_pp", p.xq_pp), ("Xls", p.xls)],
        ),
    ];
    for (rule, chain) in chains {
        for pair in chain.windows(2) {
            let (hi_name, hi) = pair[0];
            let (lo_name, lo) = pair[1];
            if !(hi > lo) {
                out.push(Violation::new(
                    lo_name,
                    rule,
                    format!("expected {hi_name} = {hi} > {lo_name} = {lo}"),
                ));
            }
        }
    }
    out
}

/// Mutual and branch reactances of the d- and q-axis equivalent circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementReactances {
    pub x_md: f64,
    pub x_mq: f64,
    pub x_f: f64,
    pub x_1d: f64,
    pub x_1q: f64,
    pub x_2q: f64,
}

/// Terminal reactances seen from the stator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeReactances {
    pub xd: f64,
    pub xd_p: f64,
    pub xd_pp: f64,
    pub xq: f64,
    pub xq_p: f64,
    pub xq_pp: f64,
    pub xls: f64,
}

fn parallel(xs: &[f64]) -> f64 {
    1.0 / xs.iter().map(|x| 1.0 / x).sum::<f64>()
}

impl CompositeReactances {
    pub fn from_machine(p: &MachineParameters) -> Self {
        Self {
            xd: p.xd,
            xd_p: p.xd_p,
            xd_pp: p.xd_pp,
            xq: p.xq,
            xq_p: p.xq_p,
            xq_pp: p.xq_pp,
            xls: p.xls,
        }
    }

    /// Forward evaluation: leakage in series with the parallel branches.
    pub fn from_elements(e: &ElementReactances, xls: f64) -> Self {
        Self {
            xd: e.x_md + xls,
            xd_p: parallel(&[e.x_md, e.x_f]) + xls,
            xd_pp: parallel(&[e.x_md, e.x_f, e.x_1d]) + xls,
            xq: e.x_mq + xls,
            xq_p: parallel(&[e.x_mq, e.x_1q]) + xls,
            xq_pp: parallel(&[e.x_mq, e.x_1q, e.x_2q]) + xls,
            xls,
        }
    }
}

/// Invert the composite reactance relations into branch reactances.
pub fn derive_element_reactances(p: &MachineParameters) -> Result<ElementReactances, ParameterError> {
    let violations = validate(p);
    if !violations.is_empty() {
        return Err(ParameterError::Invalid { violations });
    }
    let branch = |element: &'static str, relation: &'static str, reciprocal: f64| {
        if reciprocal > 0.0 && reciprocal.is_finite() {
            Ok(1.0 / reciprocal)
        } else {
            Err(ParameterError::NonPositiveElement {
                element,
                relation,
                reciprocal,
            })
        }
    };

    let x_md = p.xd - p.xls;
    let x_mq = p.xq - p.xls;
    let x_f = branch(
        "x_f",
        "d-axis transient reactance",
        1.0 / (p.xd_p - p.xls) - 1.0 / x_md,
    )?;
    let x_1d = branch(
        "x_1d",
        "d-axis sub-transient reactance",
        1.0 / (p.xd_pp - p.xls) - 1.0 / x_md - 1.0 / x_f,
    )?;
    let x_1q = branch(
        "x_1q",
        "q-axis transient reactance",
        1.0 / (p.xq_p - p.xls) - 1.0 / x_mq,
    )?;
    let x_2q = branch(
        "x_2q",
        "q-axis sub-transient reactance",
        1.0 / (p.xq_pp - p.xls) - 1.0 / x_mq - 1.0 / x_1q,
    )?;

    Ok(ElementReactances {
        x_md,
        x_mq,
        x_f,
        x_1d,
        x_1q,
        x_2q,
    })
}

/// Open- and short-circuit time constants, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConstants {
    pub td0_p: f64,
    pub td0_pp: f64,
    pub tq0_p: f64,
    pub tq0_pp: f64,
    pub td_p: f64,
    pub td_pp: f64,
    pub tq_p: f64,
    pub tq_pp: f64,
}

/// Per-unit damper branch resistances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamperResistances {
    #[serde(rename = "R_1d", default, skip_serializing_if = "Option::is_none")]
    pub r_1d: Option<f64>,
    #[serde(rename = "R_1q", default, skip_serializing_if = "Option::is_none")]
    pub r_1q: Option<f64>,
    #[serde(rename = "R_2q", default, skip_serializing_if = "Option::is_none")]
    pub r_2q: Option<f64>,
}

/// User supplied time constants. Any value given here is used verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConstantOverrides {
    #[serde(rename = "Td0_p", default, skip_serializing_if = "Option::is_none")]
    pub td0_p: Option<f64>,
    #[serde(rename = "Td0_pp", default, skip_serializing_if = "Option::is_none")]
    pub td0_pp: Option<f64>,
    #[serde(rename = "Tq0_p", default, skip_serializing_if = "Option::is_none")]
    pub tq0_p: Option<f64>,
    #[serde(rename = "Tq0_pp", default, skip_serializing_if = "Option::is_none")]
    pub tq0_pp: Option<f64>,
    #[serde(rename = "Td_p", default, skip_serializing_if = "Option::is_none")]
    pub td_p: Option<f64>,
    #[serde(rename = "Td_pp", default, skip_serializing_if = "Option::is_none")]
    pub td_pp: Option<f64>,
    #[serde(rename = "Tq_p", default, skip_serializing_if = "Option::is_none")]
    pub tq_p: Option<f64>,
    #[serde(rename = "Tq_pp", default, skip_serializing_if = "Option::is_none")]
    pub tq_pp: Option<f64>,
}

/// The q-axis transient short-circuit constant is taken as `Tq0_p * Xq_p / Xq`,
/// the same open-to-short ratio used on the d axis, instead of the printed
/// `X_2q / R_2q` form which does not carry units of seconds.
pub const TQ_P_NOTE: &str =
    "Tq_p computed as Tq0_p * Xq_p / Xq (open-to-short ratio) rather than X_2q / R_2q";

/// Everything the flux-linkage model needs, in per unit and seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParameters {
    pub elements: ElementReactances,
    pub composite: CompositeReactances,
    pub time_constants: TimeConstants,
    /// Equivalent damper resistances, supplied or back-computed from the time constants.
    pub r_1d: f64,
    pub r_1q: f64,
    pub r_2q: f64,
    pub ra: f64,
    pub rf: f64,
    /// Unsaturated d-axis mutual reactance; `elements.x_md` may be a saturated value.
    pub x_md_unsat: f64,
    /// Electrical base angular frequency, rad/s.
    pub omega_e: f64,
}

/// Time constants from the element reactances, damper resistances and overrides.
pub fn derive_time_constants(
    p: &MachineParameters,
    e: &ElementReactances,
    dampers: &DamperResistances,
    overrides: &TimeConstantOverrides,
) -> Result<(TimeConstants, [f64; 3]), ConfigError> {
    let omega_e = 2.0 * PI * p.electrical_frequency;
    let mut missing = Vec::new();

    let td0_p = overrides
        .td0_p
        .unwrap_or((e.x_f + e.x_md) / (p.rf * omega_e));
    let td_p = overrides.td_p.unwrap_or(td0_p * (p.xd_p / p.xd));

    // The damper constants need either the resistance or one of the pair
    // (open- or short-circuit), the other following from the reactance ratio.
    let mut pair = |open: Option<f64>,
                    short: Option<f64>,
                    ratio: f64,
                    from_resistance: Option<f64>,
                    label: &str,
                    resistance: &str| {
        match (open, short) {
            (Some(o), Some(s)) => (o, s),
            (Some(o), None) => (o, o * ratio),
            (None, Some(s)) => (s / ratio, s),
            (None, None) => match from_resistance {
                Some(o) => (o, o * ratio),
                None => {
                    missing.push(format!("{label} (or damper resistance {resistance})"));
                    (f64::NAN, f64::NAN)
                }
            },
        }
    };

    let td0_pp_from_r = dampers.r_1d.map(|r| (e.x_1d + p.xd_p) / (r * omega_e));
    let tq0_p_from_r = dampers.r_1q.map(|r| (e.x_1q + e.x_mq) / (r * omega_e));
    let tq0_pp_from_r = dampers.r_2q.map(|r| (e.x_2q + e.x_mq) / (r * omega_e));

    let (td0_pp, td_pp) = pair(
        overrides.td0_pp,
        overrides.td_pp,
        p.xd_pp / p.xd_p,
        td0_pp_from_r,
        "Td0_pp",
        "R_1d",
    );
    let (tq0_p, tq_p) = pair(
        overrides.tq0_p,
        overrides.tq_p,
        p.xq_p / p.xq,
        tq0_p_from_r,
        "Tq0_p",
        "R_1q",
    );
    let (tq0_pp, tq_pp) = pair(
        overrides.tq0_pp,
        overrides.tq_pp,
        p.xq_pp / p.xq_p,
        tq0_pp_from_r,
        "Tq0_pp",
        "R_2q",
    );
    if !missing.is_empty() {
        return Err(ConfigError::MissingTimeConstants { missing });
    }

    let tc = TimeConstants {
        td0_p,
        td0_pp,
        tq0_p,
        tq0_pp,
        td_p,
        td_pp,
        tq_p,
        tq_pp,
    };
    let dampers = [
        dampers.r_1d.unwrap_or((e.x_1d + p.xd_p) / (td0_pp * omega_e)),
        dampers.r_1q.unwrap_or((e.x_1q + e.x_mq) / (tq0_p * omega_e)),
        dampers.r_2q.unwrap_or((e.x_2q + e.x_mq) / (tq0_pp * omega_e)),
    ];
    Ok((tc, dampers))
}

fn check_time_constants(tc: &TimeConstants) -> Vec<Violation> {
    let mut out = Vec::new();
    let values = [
        ("Td0_p", tc.td0_p),
        ("Td0_pp", tc.td0_pp),
        ("Tq0_p", tc.tq0_p),
        ("Tq0_pp", tc.tq0_pp),
        ("Td_p", tc.td_p),
        ("Td_pp", tc.td_pp),
        ("Tq_p", tc.tq_p),
        ("Tq_pp", tc.tq_pp),
    ];
    for (name, v) in values {
        if !(v > 0.0 && v.is_finite()) {
            out.push(Violation::new(name, "time constant > 0", format!("{name} = {v}")));
        }
    }
    for (open, short, o, s) in [
        ("Td0_p", "Td_p", tc.td0_p, tc.td_p),
        ("Td0_pp", "Td_pp", tc.td0_pp, tc.td_pp),
    ] {
        if !(o > s) {
            out.push(Violation::new(
                short,
                "open-circuit constant exceeds short-circuit constant",
                format!("{open} = {o}, {short} = {s}"),
            ));
        }
    }
    out
}

impl DerivedParameters {
    /// Full derivation: element reactances, time constants, damper resistances.
    pub fn derive(
        p: &MachineParameters,
        dampers: &DamperResistances,
        overrides: &TimeConstantOverrides,
    ) -> Result<Self, crate::error::SimError> {
        let elements = derive_element_reactances(p)?;
        let (time_constants, [r_1d, r_1q, r_2q]) =
            derive_time_constants(p, &elements, dampers, overrides)?;
        let violations = check_time_constants(&time_constants);
        if !violations.is_empty() {
            return Err(ParameterError::Invalid { violations }.into());
        }
        Ok(Self {
            elements,
            composite: CompositeReactances::from_machine(p),
            time_constants,
            r_1d,
            r_1q,
            r_2q,
            ra: p.ra,
            rf: p.rf,
            x_md_unsat: elements.x_md,
            omega_e: 2.0 * PI * p.electrical_frequency,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use approx::assert_abs_diff_eq;

    fn with_overrides() -> TimeConstantOverrides {
        reference::example_time_constants()
    }

    #[test]
    fn per_unit_conversion() {
        assert_eq!(to_per_unit(415.0, 415.0).unwrap(), 1.0);
        assert_eq!(to_per_unit(0.0, 415.0).unwrap(), 0.0);
        assert_abs_diff_eq!(to_per_unit(98.0679, 57.40).unwrap(), 1.7085, epsilon = 1e-3);
        assert!(matches!(to_per_unit(1.0, 0.0), Err(ConfigError::ZeroBase { .. })));
    }

    #[test]
    fn reference_machine_is_valid() {
        assert!(validate(&reference::machine()).is_empty());
    }

    #[test]
    fn chain_violation_names_the_field() {
        let mut p = reference::machine();
        p.xd_pp = 0.6;
        let v = validate(&p);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].field, "Xd_pp");
        assert_eq!(v[0].rule, "reactance chain d-axis");
    }

    #[test]
    fn zero_leakage_is_flagged() {
        let mut p = reference::machine();
        p.xls = 0.0;
        let v = validate(&p);
        assert!(v.iter().any(|v| v.rule == "Xls > 0" && v.field == "Xls"), "{v:?}");
    }

    #[test]
    fn reports_every_violation() {
        let mut p = reference::machine();
        p.ra = -1.0;
        p.xq_p = 1.2;
        p.rated_current = 0.0;
        let fields: Vec<_> = validate(&p).into_iter().map(|v| v.field).collect();
        assert!(fields.contains(&"Ra".to_string()));
        assert!(fields.contains(&"Xq_p".to_string()));
        assert!(fields.contains(&"rated_current".to_string()));
    }

    #[test]
    fn element_reactances_of_reference_machine() {
        // Hand evaluated by reciprocal subtraction from the tabulated per-unit values.
        let e = derive_element_reactances(&reference::machine()).unwrap();
        assert_abs_diff_eq!(e.x_md, 1.6235, epsilon = 1e-4);
        assert_abs_diff_eq!(e.x_mq, 0.8981, epsilon = 1e-4);
        assert_abs_diff_eq!(e.x_f, 0.6876, epsilon = 1e-4);
        assert_abs_diff_eq!(e.x_1d, 0.1137, epsilon = 1e-4);
        assert_abs_diff_eq!(e.x_1q, 3.5070, epsilon = 1e-3);
        assert_abs_diff_eq!(e.x_2q, 1.1645, epsilon = 1e-4);
    }

    #[test]
    fn open_circuit_transient_constant() {
        let p = reference::machine();
        let d = DerivedParameters::derive(&p, &DamperResistances::default(), &with_overrides()).unwrap();
        // (0.6876 + 1.6235) / (0.03 * 2 pi 50)
        assert_abs_diff_eq!(d.time_constants.td0_p, 0.2452, epsilon = 1e-4);
        // 0.2452 * 0.568 / 1.7085
        assert_abs_diff_eq!(d.time_constants.td_p, 0.0815, epsilon = 1e-4);
        assert_eq!(d.time_constants.td_p / d.time_constants.td0_p, p.xd_p / p.xd);
    }

    #[test]
    fn overrides_pass_through_verbatim() {
        let p = reference::machine();
        let o = TimeConstantOverrides {
            td0_p: Some(0.5),
            td0_pp: Some(0.03),
            tq0_p: Some(0.2),
            tq0_pp: Some(0.04),
            td_p: Some(0.1),
            td_pp: Some(0.01),
            tq_p: Some(0.15),
            tq_pp: Some(0.02),
        };
        let d = DerivedParameters::derive(&p, &DamperResistances::default(), &o).unwrap();
        let t = d.time_constants;
        assert_eq!(
            [t.td0_p, t.td0_pp, t.tq0_p, t.tq0_pp, t.td_p, t.td_pp, t.tq_p, t.tq_pp],
            [0.5, 0.03, 0.2, 0.04, 0.1, 0.01, 0.15, 0.02]
        );
    }

    #[test]
    fn missing_damper_data_lists_alternatives() {
        let p = reference::machine();
        let err = DerivedParameters::derive(
            &p,
            &DamperResistances::default(),
            &TimeConstantOverrides {
                tq0_p: Some(0.1),
                ..Default::default()
            },
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Td0_pp (or damper resistance R_1d)"), "{msg}");
        assert!(msg.contains("Tq0_pp (or damper resistance R_2q)"), "{msg}");
        assert!(!msg.contains("Tq0_p (or"), "{msg}");
    }

    #[test]
    fn damper_resistances_reproduce_their_time_constants() {
        let p = reference::machine();
        let from_tc = DerivedParameters::derive(&p, &DamperResistances::default(), &with_overrides()).unwrap();
        let dampers = DamperResistances {
            r_1d: Some(from_tc.r_1d),
            r_1q: Some(from_tc.r_1q),
            r_2q: Some(from_tc.r_2q),
        };
        let from_r = DerivedParameters::derive(&p, &dampers, &TimeConstantOverrides::default()).unwrap();
        let (a, b) = (from_tc.time_constants, from_r.time_constants);
        for (x, y) in [
            (a.td0_pp, b.td0_pp),
            (a.tq0_p, b.tq0_p),
            (a.tq0_pp, b.tq0_pp),
            (a.td_pp, b.td_pp),
            (a.tq_p, b.tq_p),
            (a.tq_pp, b.tq_pp),
        ] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn broken_chain_is_a_parameter_error() {
        let mut p = reference::machine();
        p.xq_pp = 0.9;
        assert!(matches!(
            derive_element_reactances(&p),
            Err(ParameterError::Invalid { .. })
        ));
    }

    #[test]
    fn tabulated_ohmic_values_share_one_base() {
        let implied: Vec<f64> = reference::OHMIC_TABLE
            .iter()
            .map(|(_, ohm, pu)| ohm / pu)
            .collect();
        for z in &implied {
            assert_abs_diff_eq!(*z, 57.40, epsilon = 0.05);
        }
        // The nameplate base differs from the base implied by the table.
        let nameplate = BaseQuantities::from_machine(&reference::machine()).unwrap();
        assert_abs_diff_eq!(nameplate.impedance, 72.61, epsilon = 0.01);
    }
}
