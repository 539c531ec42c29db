//! d-axis saturation from a two-point Froelich fit of the open-circuit characteristic.
//!
//! The magnetisation curve is `psi = i_f / (a + b i_f)`. Below the knee the
//! air-gap line `psi = x_md_unsat * i_f` applies, so the saturated mutual
//! reactance is the Froelich ratio clamped at its unsaturated value.

use serde::{Deserialize, Serialize};

use crate::error::SaturationError;
use crate::perunit::{CompositeReactances, DerivedParameters};

/// A point on the open-circuit characteristic: (field current, flux linkage), per unit.
pub type OccPoint = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FroelichCurve {
    pub a: f64,
    pub b: f64,
    pub anchor_low: Option<OccPoint>,
    pub anchor_high: Option<OccPoint>,
    pub x_md_unsat: f64,
}

impl FroelichCurve {
    /// Pre-fitted constants, no anchors.
    pub fn from_constants(a: f64, b: f64, x_md_unsat: f64) -> Result<Self, SaturationError> {
        if !(a > 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(SaturationError::Constants { a, b });
        }
        Ok(Self {
            a,
            b,
            anchor_low: None,
            anchor_high: None,
            x_md_unsat,
        })
    }

    /// Flux linkage on the Froelich curve for field current `i_f`.
    pub fn evaluate_occ(&self, i_f: f64) -> Result<f64, SaturationError> {
        if !(i_f >= 0.0) {
            return Err(SaturationError::NegativeFieldCurrent(i_f));
        }
        Ok(i_f / (self.a + self.b * i_f))
    }

    /// Upper bound of the air-gap flux domain, `1 / b`.
    pub fn asymptote(&self) -> f64 {
        if self.b > 0.0 {
            1.0 / self.b
        } else {
            f64::INFINITY
        }
    }

    /// Field current that produces `psi_t` on the Froelich curve.
    pub fn equivalent_field_current(&self, psi_t: f64) -> Result<f64, SaturationError> {
        self.check_domain(psi_t)?;
        Ok(self.a * psi_t / (1.0 - self.b * psi_t))
    }

    /// Saturated d-axis mutual reactance at air-gap flux `psi_t`.
    ///
    /// `psi_t / i_f_eq` with `i_f_eq` from inverting the curve reduces to
    /// `(1 - b psi_t) / a`, clamped to the air-gap value.
    pub fn saturated_xmd(&self, psi_t: f64) -> Result<f64, SaturationError> {
        self.check_domain(psi_t)?;
        Ok(self.x_md_unsat.min((1.0 - self.b * psi_t) / self.a))
    }

    /// Flux where the Froelich line meets the air-gap line.
    pub fn knee_flux(&self) -> f64 {
        ((1.0 - self.a * self.x_md_unsat) / self.b).max(0.0)
    }

    fn check_domain(&self, psi_t: f64) -> Result<(), SaturationError> {
        let limit = self.asymptote();
        if !(psi_t >= 0.0 && psi_t < limit) {
            return Err(SaturationError::Domain { psi_t, limit });
        }
        Ok(())
    }
}

/// Two-point fit through a low and a high OCC anchor.
pub fn fit_froelich(
    anchor_low: OccPoint,
    anchor_high: OccPoint,
    x_md_unsat: f64,
) -> Result<FroelichCurve, SaturationError> {
    let (i_l, psi_l) = anchor_low;
    let (i_u, psi_u) = anchor_high;
    let fail = |reason: &str| Err(SaturationError::Fit { reason: reason.into() });
    if !(0.0 < i_l && i_l < i_u) {
        return fail("field currents must satisfy 0 < I_fl < I_fu");
    }
    if !(0.0 < psi_l && psi_l < psi_u) {
        return fail("flux linkages must satisfy 0 < psi_l < psi_u");
    }
    if !(psi_l / i_l > psi_u / i_u) {
        return fail("slope psi/I_f must fall between the anchors");
    }

    let gamma = i_l / psi_l;
    let b = (i_u - gamma * psi_u) / (psi_u * (i_u - i_l));
    let a = gamma - b * i_l;
    if !(b > 0.0 && a > 0.0) {
        return fail("fit produced non-positive constants");
    }
    Ok(FroelichCurve {
        a,
        b,
        anchor_low: Some(anchor_low),
        anchor_high: Some(anchor_high),
        x_md_unsat,
    })
}

/// Copy of `d` with the d-axis mutual reactance replaced by `x_md_sat`.
///
/// Leakage and branch reactances are unchanged. The d-axis composite
/// reactances are re-evaluated from the elements, and the d-axis time
/// constants are scaled by the same reactance ratios that define them, so
/// resistances stay fixed. q-axis quantities are untouched.
pub fn rescale_saturated_parameters(d: &DerivedParameters, x_md_sat: f64) -> DerivedParameters {
    if x_md_sat == d.elements.x_md {
        return *d;
    }
    let mut out = *d;
    out.elements.x_md = x_md_sat;
    let forward = CompositeReactances::from_elements(&out.elements, d.composite.xls);
    out.composite.xd = forward.xd;
    out.composite.xd_p = forward.xd_p;
    out.composite.xd_pp = forward.xd_pp;

    let (old, new) = (&d.composite, &out.composite);
    let e = &d.elements;
    let tc = &mut out.time_constants;
    // T'd0 ~ (x_f + x_md) / Rf, T''d0 ~ (x_1d + X'd) / R_1d.
    tc.td0_p = d.time_constants.td0_p * (e.x_f + x_md_sat) / (e.x_f + e.x_md);
    tc.td0_pp = d.time_constants.td0_pp * (e.x_1d + new.xd_p) / (e.x_1d + old.xd_p);
    // Short-circuit constants keep their open-to-short reactance ratio structure.
    tc.td_p = d.time_constants.td_p * (tc.td0_p / d.time_constants.td0_p)
        * ((new.xd_p / new.xd) / (old.xd_p / old.xd));
    tc.td_pp = d.time_constants.td_pp * (tc.td0_pp / d.time_constants.td0_pp)
        * ((new.xd_pp / new.xd_p) / (old.xd_pp / old.xd_p));
    out
}
