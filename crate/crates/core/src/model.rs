//! Per-unit flux-linkage state-space model of the machine.
//!
//! State ordering is `[psi_d, psi_q, psi_f, psi_1d, psi_1q, psi_2q]`. The
//! stator currents are eliminated through the current-extraction matrix, so
//! the model reads
//!
//! ```text
//! dx/dt = (A1 + A2 A3) x + B Ef
//! [i_d, i_q] = A3 x
//! [v_d, v_q] = C x,   C = R_L A3
//! ```
//!
//! Time is in seconds. The stator rows carry the base angular frequency on
//! both the rotational coupling and the resistive drop; the rotor rows are
//! first-order lags with the short-circuit time constants.

use std::f64::consts::PI;

use nalgebra::{Matrix2x6, Matrix6, Matrix6x2, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{NumericalError, ParameterError};
use crate::perunit::DerivedParameters;

/// Per-unit flux linkages of the six windings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxState {
    pub psi_d: f64,
    pub psi_q: f64,
    pub psi_f: f64,
    pub psi_1d: f64,
    pub psi_1q: f64,
    pub psi_2q: f64,
}

impl FluxState {
    pub const ZERO: Self = Self {
        psi_d: 0.0,
        psi_q: 0.0,
        psi_f: 0.0,
        psi_1d: 0.0,
        psi_1q: 0.0,
        psi_2q: 0.0,
    };

    pub fn to_array(&self) -> [f64; 6] {
        [self.psi_d, self.psi_q, self.psi_f, self.psi_1d, self.psi_1q, self.psi_2q]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            psi_d: a[0],
            psi_q: a[1],
            psi_f: a[2],
            psi_1d: a[3],
            psi_1q: a[4],
            psi_2q: a[5],
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::from(self.to_array())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::from_array([v[0], v[1], v[2], v[3], v[4], v[5]])
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    /// Magnitude of the stator flux vector.
    pub fn air_gap_flux(&self) -> f64 {
        self.psi_d.hypot(self.psi_q)
    }
}

/// Load and speed seen by the stator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingCondition {
    /// Per-unit load resistance; zero is a bolted short circuit.
    pub load_resistance: f64,
    /// Per-unit rotor speed.
    pub speed: f64,
}

/// Time constant placed in the field-flux row of `A1` and in `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTimeConstant {
    /// Short-circuit transient constant `T'd`.
    #[default]
    AsPrinted,
    /// Open-circuit transient constant `T'd0`.
    OpenCircuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    pub a1: Matrix6<f64>,
    pub a2: Matrix6x2<f64>,
    pub a3: Matrix2x6<f64>,
    pub b: Vector6<f64>,
    pub c: Matrix2x6<f64>,
    /// `A1 + A2 A3`
    pub system: Matrix6<f64>,
}

/// Current-extraction matrix: `[i_d, i_q] = A3 x`, sub-transient leading terms.
pub fn current_matrix(d: &DerivedParameters) -> Matrix2x6<f64> {
    let c = &d.composite;
    let mut a3 = Matrix2x6::zeros();
    a3[(0, 0)] = 1.0 / c.xd_pp;
    a3[(0, 2)] = 1.0 / c.xd - 1.0 / c.xd_p;
    a3[(0, 3)] = 1.0 / c.xd_p - 1.0 / c.xd_pp;
    a3[(1, 1)] = 1.0 / c.xq_pp;
    a3[(1, 4)] = 1.0 / c.xq - 1.0 / c.xq_p;
    a3[(1, 5)] = 1.0 / c.xq_p - 1.0 / c.xq_pp;
    a3
}

pub fn assemble_matrices(
    d: &DerivedParameters,
    oc: &OperatingCondition,
    field: FieldTimeConstant,
) -> Result<ModelMatrices, ParameterError> {
    let c = &d.composite;
    let t = &d.time_constants;
    if c.xd == c.xd_p {
        return Err(ParameterError::DegenerateTransient);
    }
    if !(oc.load_resistance >= 0.0) {
        return Err(ParameterError::NonPositive {
            what: "load resistance",
            value: oc.load_resistance,
        });
    }
    for (what, value) in [
        ("Td_p", t.td_p),
        ("Td_pp", t.td_pp),
        ("Tq_p", t.tq_p),
        ("Tq_pp", t.tq_pp),
        ("Td0_p", t.td0_p),
    ] {
        if !(value > 0.0) {
            return Err(ParameterError::NonPositive { what, value });
        }
    }

    let t_field = match field {
        FieldTimeConstant::AsPrinted => t.td_p,
        FieldTimeConstant::OpenCircuit => t.td0_p,
    };
    let rot = oc.speed * d.omega_e;

    let mut a1 = Matrix6::zeros();
    a1[(0, 1)] = -rot;
    a1[(1, 0)] = rot;
    for (row, col, tc) in [
        (2, 0, t_field),
        (3, 0, t.td_pp),
        (4, 1, t.tq_p),
        (5, 1, t.tq_pp),
    ] {
        a1[(row, col)] = 1.0 / tc;
        a1[(row, row)] = -1.0 / tc;
    }

    let drop = -(d.ra + oc.load_resistance) * d.omega_e;
    let mut a2 = Matrix6x2::zeros();
    a2[(0, 0)] = drop;
    a2[(1, 1)] = drop;

    let a3 = current_matrix(d);

    let mut b = Vector6::zeros();
    b[2] = (1.0 / t_field) * (c.xd_p / (c.xd - c.xd_p));

    let cmat = a3 * oc.load_resistance;
    let system = a1 + a2 * a3;
    Ok(ModelMatrices {
        a1,
        a2,
        a3,
        b,
        c: cmat,
        system,
    })
}

pub fn state_derivative(m: &ModelMatrices, x: &FluxState, ef: f64) -> Result<FluxState, NumericalError> {
    let dx = m.system * x.to_vector() + m.b * ef;
    check_finite(x, dx)
}

fn check_finite(x: &FluxState, dx: Vector6<f64>) -> Result<FluxState, NumericalError> {
    if dx.iter().all(|v| v.is_finite()) {
        Ok(FluxState::from_vector(&dx))
    } else {
        Err(NumericalError::NonFiniteDerivative { state: x.to_array() })
    }
}

/// Stator fluxes that make both stator currents vanish for the given rotor fluxes.
pub fn slave_stator_fluxes(m: &ModelMatrices, x: &FluxState) -> FluxState {
    let a3 = &m.a3;
    FluxState {
        psi_d: -(a3[(0, 2)] * x.psi_f + a3[(0, 3)] * x.psi_1d) / a3[(0, 0)],
        psi_q: -(a3[(1, 4)] * x.psi_1q + a3[(1, 5)] * x.psi_2q) / a3[(1, 1)],
        ..*x
    }
}

/// Derivative with the stator held on its open-terminal manifold `i_d = i_q = 0`.
///
/// The stator rows are the time derivative of the algebraic constraint, so
/// any linear integrator stays on the manifold.
pub fn open_terminal_derivative(m: &ModelMatrices, x: &FluxState, ef: f64) -> Result<FluxState, NumericalError> {
    let xs = slave_stator_fluxes(m, x);
    let mut dx = m.a1 * xs.to_vector() + m.b * ef;
    let a3 = &m.a3;
    dx[0] = -(a3[(0, 2)] * dx[2] + a3[(0, 3)] * dx[3]) / a3[(0, 0)];
    dx[1] = -(a3[(1, 4)] * dx[4] + a3[(1, 5)] * dx[5]) / a3[(1, 1)];
    check_finite(x, dx)
}

pub fn extract_currents(d: &DerivedParameters, x: &FluxState) -> (f64, f64) {
    let i = current_matrix(d) * x.to_vector();
    (i[0], i[1])
}

/// Terminal voltage across a resistive load, `v = R_L i`.
///
/// Currents leave the machine, so the load drop has the same sign as the
/// current; this is the sign that makes `A2 = -(Ra + R_L) omega_B`.
pub fn terminal_voltage(d: &DerivedParameters, x: &FluxState, load_resistance: f64) -> (f64, f64) {
    let (i_d, i_q) = extract_currents(d, x);
    (load_resistance * i_d, load_resistance * i_q)
}

/// Open-terminal voltage: the speed voltage `(-omega psi_q, omega psi_d)`.
pub fn open_terminal_voltage(x: &FluxState, speed: f64) -> (f64, f64) {
    (-speed * x.psi_q, speed * x.psi_d)
}

pub fn electromagnetic_torque(x: &FluxState, current: (f64, f64)) -> f64 {
    let (i_d, i_q) = current;
    x.psi_d * i_q - x.psi_q * i_d
}

/// Amplitude-invariant inverse Park transform without zero sequence.
pub fn inverse_park(d: f64, q: f64, theta: f64) -> [f64; 3] {
    let shift = 2.0 * PI / 3.0;
    [
        d * theta.cos() - q * theta.sin(),
        d * (theta - shift).cos() - q * (theta - shift).sin(),
        d * (theta + shift).cos() - q * (theta + shift).sin(),
    ]
}

/// Steady state of a linear model for constant Ef, if the system matrix is invertible.
pub fn linear_steady_state(m: &ModelMatrices, ef: f64) -> Option<FluxState> {
    let rhs = -(m.b * ef);
    m.system.lu().solve(&rhs).map(|x| FluxState::from_vector(&x))
}

/// Apply `v -> A3 v` to a stator-current pair helper.
pub fn currents_from_matrix(m: &ModelMatrices, x: &FluxState) -> Vector2<f64> {
    m.a3 * x.to_vector()
}
