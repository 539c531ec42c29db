//! Fixed-step explicit integration.

use serde::{Deserialize, Serialize};

use crate::error::{NumericalError, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Seconds.
    #[serde(default = "default_step")]
    pub step_size: f64,
    /// Seconds. When absent the scenario's own duration is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub method: Method,
    /// Per-unit flux magnitude that aborts a run as diverged.
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
}

fn default_step() -> f64 {
    1e-4
}
fn default_threshold() -> f64 {
    10.0
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_size: default_step(),
            duration: None,
            method: Method::Rk4,
            divergence_threshold: default_threshold(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            out.push(Violation::new("step_size", "step_size > 0", format!("{}", self.step_size)));
        }
        if let Some(t) = self.duration {
            if !(t >= self.step_size && t.is_finite()) {
                out.push(Violation::new(
                    "duration",
                    "duration >= step_size",
                    format!("duration = {t}, step_size = {}", self.step_size),
                ));
            }
        }
        if !(self.divergence_threshold > 1.0) {
            out.push(Violation::new(
                "divergence_threshold",
                "divergence_threshold > 1",
                format!("{}", self.divergence_threshold),
            ));
        }
        out
    }
}

fn axpy<const N: usize>(x: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| x[i] + h * k[i])
}

fn staged<const N: usize>(
    stage: usize,
    r: Result<[f64; N], NumericalError>,
) -> Result<[f64; N], NumericalError> {
    match r {
        Ok(k) if k.iter().all(|v| v.is_finite()) => Ok(k),
        _ => Err(NumericalError::NonFiniteStage { stage }),
    }
}

/// One explicit step of `dx/dt = f(x)`.
///
/// Evaluation order is fixed, so equal inputs give bit-identical outputs.
pub fn step<const N: usize, F>(x: &[f64; N], dt: f64, method: Method, mut f: F) -> Result<[f64; N], NumericalError>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N], NumericalError>,
{
    let out = match method {
        Method::Euler => {
            let k1 = staged(1, f(x))?;
            axpy(x, dt, &k1)
        }
        Method::Rk4 => {
            let k1 = staged(1, f(x))?;
            let k2 = staged(2, f(&axpy(x, 0.5 * dt, &k1)))?;
            let k3 = staged(3, f(&axpy(x, 0.5 * dt, &k2)))?;
            let k4 = staged(4, f(&axpy(x, dt, &k3)))?;
            std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        }
    };
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(NumericalError::NonFiniteStage { stage: 0 })
    }
}
