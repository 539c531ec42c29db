//! Excitation emf: a separately excited source or the rectified self-excitation loop.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Violation};
use crate::model::{FluxState, ModelMatrices};
use crate::perunit::DerivedParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationMode {
    #[default]
    Separate,
    SelfExcited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationConfig {
    #[serde(default)]
    pub mode: ExcitationMode,
    /// Per-unit emf in separate mode.
    #[serde(rename = "Ef_setpoint", default = "default_setpoint")]
    pub ef_setpoint: f64,
    /// Terminal-voltage-to-emf gain of the rectifier loop. `None` resolves to
    /// the ideal bridge average `1.35 V_LL / V_field`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectifier_gain: Option<f64>,
    /// Initial field flux standing in for remanence, per unit.
    #[serde(default = "default_residual")]
    pub residual_flux: f64,
    #[serde(rename = "Ef_ceiling", default = "default_ceiling")]
    pub ef_ceiling: f64,
    /// Also seed `psi_d = residual_flux * x_md / (x_md + x_f)`.
    #[serde(default)]
    pub seed_stator_flux: bool,
}

fn default_setpoint() -> f64 {
    1.0
}
fn default_residual() -> f64 {
    0.05
}
fn default_ceiling() -> f64 {
    5.0
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            mode: ExcitationMode::Separate,
            ef_setpoint: default_setpoint(),
            rectifier_gain: None,
            residual_flux: default_residual(),
            ef_ceiling: default_ceiling(),
            seed_stator_flux: false,
        }
    }
}

impl ExcitationConfig {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.ef_setpoint.is_finite() {
            out.push(Violation::new("Ef_setpoint", "finite", format!("{}", self.ef_setpoint)));
        }
        if let Some(k) = self.rectifier_gain {
            if !(k > 0.0 && k.is_finite()) {
                out.push(Violation::new("rectifier_gain", "rectifier_gain > 0", format!("{k}")));
            }
        }
        if !(self.ef_ceiling > 0.0) {
            out.push(Violation::new("Ef_ceiling", "Ef_ceiling > 0", format!("{}", self.ef_ceiling)));
        }
        if !(self.residual_flux >= 0.0 && self.residual_flux.is_finite()) {
            out.push(Violation::new(
                "residual_flux",
                "residual_flux >= 0",
                format!("{}", self.residual_flux),
            ));
        }
        if self.mode == ExcitationMode::SelfExcited && self.residual_flux == 0.0 {
            out.push(Violation::new(
                "residual_flux",
                "residual_flux > 0 in self-excited mode",
                "build-up impossible without remanence",
            ));
        }
        out
    }
}

/// Ef and whether the ceiling clamp acted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emf {
    pub ef: f64,
    pub clamped: bool,
}

/// Excitation emf for the given terminal voltage.
///
/// In self-excited mode the rectifier output is `k |v|`. The field coupling
/// `x_md / R_f` is folded into `k` at the unsaturated reactance, so the
/// emf follows the saturated mutual reactance through the ratio
/// `x_md_sat / x_md_unsat`.
pub fn excitation_emf(
    cfg: &ExcitationConfig,
    rectifier_gain: f64,
    v_d: f64,
    v_q: f64,
    d: &DerivedParameters,
) -> Emf {
    match cfg.mode {
        ExcitationMode::Separate => Emf {
            ef: cfg.ef_setpoint,
            clamped: false,
        },
        ExcitationMode::SelfExcited => {
            let v_f = rectifier_gain * v_d.hypot(v_q);
            let ef = v_f * d.elements.x_md / d.x_md_unsat;
            if ef > cfg.ef_ceiling {
                Emf {
                    ef: cfg.ef_ceiling,
                    clamped: true,
                }
            } else {
                Emf { ef, clamped: false }
            }
        }
    }
}

pub fn initial_state(cfg: &ExcitationConfig, d: &DerivedParameters) -> Result<FluxState, ConfigError> {
    match cfg.mode {
        ExcitationMode::Separate => Ok(FluxState::ZERO),
        ExcitationMode::SelfExcited => {
            if !(cfg.residual_flux > 0.0) {
                return Err(ConfigError::NoRemanence);
            }
            let e = &d.elements;
            let psi_d = if cfg.seed_stator_flux {
                cfg.residual_flux * e.x_md / (e.x_md + e.x_f)
            } else {
                0.0
            };
            Ok(FluxState {
                psi_f: cfg.residual_flux,
                psi_d,
                ..FluxState::ZERO
            })
        }
    }
}

/// d-axis rotor Jacobian of the open-terminal loop `Ef = k psi_d`, linearised
/// about the origin in the `psi_d > 0` half-space. Rotor state `[psi_f, psi_1d, psi_1q, psi_2q]`.
pub fn open_loop_jacobian(m: &ModelMatrices, gain: f64) -> Matrix4<f64> {
    let a3 = &m.a3;
    // psi_d and psi_q as linear functions of the rotor fluxes.
    let sd = [-a3[(0, 2)] / a3[(0, 0)], -a3[(0, 3)] / a3[(0, 0)], 0.0, 0.0];
    let sq = [0.0, 0.0, -a3[(1, 4)] / a3[(1, 1)], -a3[(1, 5)] / a3[(1, 1)]];
    let mut j = Matrix4::zeros();
    for (r, row) in (2..6).enumerate() {
        for c in 0..4 {
            j[(r, c)] = m.a1[(row, 2 + c)] + m.a1[(row, 0)] * sd[c] + m.a1[(row, 1)] * sq[c];
        }
    }
    for c in 0..4 {
        j[(0, c)] += m.b[2] * gain * sd[c];
    }
    j
}

pub fn spectral_abscissa(j: &Matrix4<f64>) -> f64 {
    j.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest rectifier gain that destabilises the unsaturated open-terminal loop.
///
/// `speed` scales the speed voltage `|v| = speed * psi_d`, so the gain enters
/// the loop as `gain * speed`.
pub fn critical_rectifier_gain(m: &ModelMatrices, speed: f64) -> f64 {
    let abscissa = |k: f64| spectral_abscissa(&open_loop_jacobian(m, k * speed));
    let (mut lo, mut hi) = (0.0, 1.0);
    while abscissa(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if abscissa(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Steady self-excited open-circuit voltage on the Froelich curve.
///
/// Closed form of `V = OCC(k V / x_md_unsat)`; `None` when the gain cannot
/// sustain a nonzero voltage.
pub fn saturated_fixed_point(a: f64, b: f64, x_md_unsat: f64, gain_times_speed: f64) -> Option<f64> {
    let v = (1.0 - a * x_md_unsat / gain_times_speed) / b;
    (v > 0.0).then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_matrices, FieldTimeConstant, OperatingCondition};
    use crate::perunit::DamperResistances;
    use crate::reference;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params() -> DerivedParameters {
        DerivedParameters::derive(
            &reference::machine(),
            &DamperResistances::default(),
            &reference::example_time_constants(),
        )
        .unwrap()
    }

    fn self_excited() -> ExcitationConfig {
        ExcitationConfig {
            mode: ExcitationMode::SelfExcited,
            ..Default::default()
        }
    }

    #[test]
    fn separate_mode_passes_setpoint_through() {
        let d = params();
        let cfg = ExcitationConfig::default();
        assert_eq!(excitation_emf(&cfg, 2.5, 3.0, -4.0, &d).ef, 1.0);
    }

    #[test]
    fn zero_voltage_gives_zero_emf() {
        let d = params();
        let e = excitation_emf(&self_excited(), 2.5, 0.0, 0.0, &d);
        assert_eq!(e, Emf { ef: 0.0, clamped: false });
    }

    #[test]
    fn ceiling_clamp_is_reported() {
        let d = params();
        let e = excitation_emf(&self_excited(), 2.5, 0.0, 4.0, &d);
        assert_eq!(e, Emf { ef: 5.0, clamped: true });
    }

    #[test]
    fn initial_states() {
        let d = params();
        assert_eq!(initial_state(&ExcitationConfig::default(), &d).unwrap(), FluxState::ZERO);
        let x = initial_state(&self_excited(), &d).unwrap();
        assert_eq!(
            x,
            FluxState {
                psi_f: 0.05,
                ..FluxState::ZERO
            }
        );
        let cfg = ExcitationConfig {
            residual_flux: 0.0,
            ..self_excited()
        };
        assert!(matches!(initial_state(&cfg, &d), Err(ConfigError::NoRemanence)));
        assert!(!cfg.validate().is_empty());
    }

    #[test]
    fn default_gain_of_reference_bases() {
        assert_abs_diff_eq!(reference::default_rectifier_gain(&reference::machine()), 2.5466, epsilon = 1e-4);
    }

    fn open_matrices() -> ModelMatrices {
        assemble_matrices(
            &params(),
            &OperatingCondition {
                load_resistance: 1e4,
                speed: 1.0,
            },
            FieldTimeConstant::AsPrinted,
        )
        .unwrap()
    }

    #[test]
    fn critical_gain_matches_sweep() {
        let m = open_matrices();
        let k = critical_rectifier_gain(&m, 1.0);
        // Brute-force sweep for the first gain with a non-negative eigenvalue.
        let mut k_sweep = f64::NAN;
        for i in 0..=4000 {
            let kk = i as f64 * 1e-3;
            if spectral_abscissa(&open_loop_jacobian(&m, kk)) >= 0.0 {
                k_sweep = kk;
                break;
            }
        }
        assert!((k - k_sweep).abs() <= 1e-3, "{k} vs {k_sweep}");
        // Unit open-circuit gain from Ef to terminal voltage.
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn critical_gain_scales_with_speed() {
        let m = open_matrices();
        assert_abs_diff_eq!(critical_rectifier_gain(&m, 0.5), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn fixed_point_solves_occ_equation() {
        let (a, b, x) = (reference::FROELICH_A, reference::FROELICH_B, 1.6235);
        let k = 2.5466;
        let v = saturated_fixed_point(a, b, x, k).unwrap();
        let i_f = k * v / x;
        assert_abs_diff_eq!(v, i_f / (a + b * i_f), epsilon = 1e-12);
        assert!(saturated_fixed_point(a, b, x, 0.5).is_none());
    }

    proptest! {
        #[test]
        fn self_excited_emf_is_non_negative(v_d in -5.0f64..5.0, v_q in -5.0f64..5.0, k in 0.01f64..10.0, x in 0.5f64..1.6235) {
            let mut d = params();
            d.elements.x_md = x;
            let e = excitation_emf(&self_excited(), k, v_d, v_q, &d);
            prop_assert!(e.ef >= 0.0 && e.ef <= 5.0);
        }
    }
}
