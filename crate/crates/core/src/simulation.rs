//! Event-driven fixed-step simulation of one scenario script.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, NumericalError, SimError, Violation};
use crate::excitation::{excitation_emf, initial_state, ExcitationConfig, ExcitationMode};
use crate::integrator::{step, IntegratorConfig};
use crate::model::{
    assemble_matrices, electromagnetic_torque, inverse_park, open_terminal_derivative, open_terminal_voltage,
    slave_stator_fluxes, state_derivative, FieldTimeConstant, FluxState, ModelMatrices, OperatingCondition,
};
use crate::perunit::DerivedParameters;
use crate::saturation::{rescale_saturated_parameters, FroelichCurve};
use crate::scenarios::{Action, Load, ScenarioScript};
use crate::trace::{DivergenceCause, EventRecord, Outcome, RunMetadata, Sample, TimeSeries, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default)]
    pub field_time_constant: FieldTimeConstant,
    /// Per-unit load resistance standing in for open terminals.
    #[serde(default = "default_open_resistance")]
    pub open_circuit_resistance: f64,
    /// Replace the stiff stator rows by their `i = 0` limit while the terminals are open.
    #[serde(default = "default_true")]
    pub open_terminal_elimination: bool,
    /// Per-unit rotor speed, held constant.
    #[serde(default = "default_speed")]
    pub speed: f64,
    /// Rotor angle at t = 0, radians.
    #[serde(default)]
    pub initial_angle: f64,
}

fn default_open_resistance() -> f64 {
    1e4
}
fn default_true() -> bool {
    true
}
fn default_speed() -> f64 {
    1.0
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            field_time_constant: FieldTimeConstant::AsPrinted,
            open_circuit_resistance: default_open_resistance(),
            open_terminal_elimination: true,
            speed: default_speed(),
            initial_angle: 0.0,
        }
    }
}

impl ModelOptions {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.open_circuit_resistance > 0.0 && self.open_circuit_resistance.is_finite()) {
            out.push(Violation::new(
                "open_circuit_resistance",
                "R_L > 0",
                format!("{}", self.open_circuit_resistance),
            ));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            out.push(Violation::new("speed", "omega > 0", format!("{}", self.speed)));
        }
        if !self.initial_angle.is_finite() {
            out.push(Violation::new("initial_angle", "finite", format!("{}", self.initial_angle)));
        }
        out
    }
}

/// Everything a run needs besides the script.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub derived: DerivedParameters,
    /// `None` disables saturation.
    pub saturation: Option<FroelichCurve>,
    pub excitation: ExcitationConfig,
    /// Resolved rectifier gain.
    pub rectifier_gain: f64,
    pub model: ModelOptions,
    pub integrator: IntegratorConfig,
    pub config_hash: String,
    pub echo: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Condition {
    load: Load,
    excitation: ExcitationConfig,
}

/// Matrices for one load and one saturation level.
#[derive(Debug, Clone)]
struct Active {
    load: Load,
    x_md_bits: u64,
    params: DerivedParameters,
    m: ModelMatrices,
    eliminate: bool,
    r_load: f64,
}

impl Simulation {
    /// Start from the excitation's initial state.
    pub fn run(&self, script: &ScenarioScript) -> Result<TimeSeries, SimError> {
        let mut exc = self.excitation;
        if let Some(mode) = script.excitation_mode {
            exc.mode = mode;
        }
        let x0 = initial_state(&exc, &self.derived)?;
        self.run_from(x0, script)
    }

    pub fn run_from(&self, x0: FluxState, script: &ScenarioScript) -> Result<TimeSeries, SimError> {
        let dt = self.integrator.step_size;
        let duration = self
            .integrator
            .duration
            .or(script.duration)
            .ok_or_else(|| ConfigError::Invalid {
                violations: vec![Violation::new(
                    "integrator.duration",
                    "duration required",
                    format!("scenario `{}` has no duration of its own", script.name),
                )],
            })?;
        let mut violations: Vec<Violation> = self
            .integrator
            .validate()
            .into_iter()
            .map(|v| v.under("integrator"))
            .collect();
        if !(duration >= dt) {
            violations.push(Violation::new("integrator.duration", "duration >= step_size", format!("{duration}")));
        }
        violations.extend(script.validate(duration).into_iter().map(|v| v.under("scenario")));
        if !violations.is_empty() {
            return Err(ConfigError::Invalid { violations }.into());
        }

        let saturation = match script.saturation {
            Some(false) => None,
            _ => self.saturation,
        };
        let mut cond = Condition {
            load: script.initial_load,
            excitation: self.excitation,
        };
        if let Some(mode) = script.excitation_mode {
            cond.excitation.mode = mode;
        }

        let n = (duration / dt).round() as usize;
        let event_steps: Vec<usize> = script
            .events
            .iter()
            .map(|e| ((e.time / dt).round() as usize).min(n))
            .collect();

        let mut meta = RunMetadata {
            schema_version: SCHEMA_VERSION,
            scenario: script.name.clone(),
            config_hash: self.config_hash.clone(),
            binary_version: env!("CARGO_PKG_VERSION").to_string(),
            outcome: None,
            expected_divergence: script.expect_divergence,
            ef_ceiling_reached: false,
            events: Vec::new(),
            notes: script.notes.clone(),
            echo: self.echo.clone(),
        };
        meta.notes.push(format!(
            "saturation {}",
            match &saturation {
                Some(c) => format!("enabled (a = {}, b = {})", c.a, c.b),
                None => "disabled".to_string(),
            }
        ));
        for (e, k) in script.events.iter().zip(&event_steps) {
            let grid = *k as f64 * dt;
            if (grid - e.time).abs() > 1e-12 * e.time.abs().max(1.0) {
                meta.notes.push(format!("event {} at {} s snapped to {grid} s", e.action.label(), e.time));
            }
        }

        let speed = self.model.speed;
        let mut x = x0;
        let mut active: Option<Active> = None;
        let mut samples = Vec::with_capacity(n + 1);
        let mut next_event = 0;
        let mut outcome = Outcome::Completed;

        for k in 0..=n {
            let t = k as f64 * dt;
            let mut pending = Vec::new();
            while next_event < script.events.len() && event_steps[next_event] == k {
                let e = script.events[next_event];
                pending.push((e, x));
                match e.action {
                    Action::SetLoad(r) => cond.load = Load::Resistive(r),
                    Action::ShortCircuit => cond.load = Load::Resistive(0.0),
                    Action::OpenCircuit => cond.load = Load::Open,
                    Action::SetEf(v) => cond.excitation.ef_setpoint = v,
                    Action::SetExcitationMode(m) => cond.excitation.mode = m,
                }
                next_event += 1;
            }

            // Saturation from the last accepted state.
            let x_md = match &saturation {
                Some(c) => match c.saturated_xmd(x.air_gap_flux()) {
                    Ok(v) => v,
                    Err(err) => {
                        outcome = Outcome::Diverged {
                            time: t,
                            cause: DivergenceCause::SaturationDomain,
                            detail: err.to_string(),
                        };
                        break;
                    }
                },
                None => self.derived.elements.x_md,
            };
            let a = self.activate(active.take(), cond.load, x_md)?;
            if a.eliminate {
                x = slave_stator_fluxes(&a.m, &x);
            }
            for (e, before) in pending {
                meta.events.push(EventRecord {
                    time: e.time,
                    applied_at: t,
                    action: e.action.label(),
                    state_before: before,
                    state_after: x,
                });
                if a.eliminate && before != x {
                    meta.notes.push(format!(
                        "open terminals at {t} s: stator fluxes moved onto the zero-current manifold (psi_d {} -> {}, psi_q {} -> {})",
                        before.psi_d, x.psi_d, before.psi_q, x.psi_q
                    ));
                }
            }

            let mut clamped = false;
            samples.push(self.sample(&a, &cond.excitation, &x, t, &mut clamped)?);
            meta.ef_ceiling_reached |= clamped;

            if !x.is_finite() {
                outcome = Outcome::Diverged {
                    time: t,
                    cause: DivergenceCause::NonFinite,
                    detail: "non-finite state".into(),
                };
                break;
            }
            if x.max_abs() > self.integrator.divergence_threshold {
                outcome = Outcome::Diverged {
                    time: t,
                    cause: DivergenceCause::FluxThreshold,
                    detail: format!(
                        "flux {} exceeds threshold {}",
                        x.max_abs(),
                        self.integrator.divergence_threshold
                    ),
                };
                break;
            }
            if clamped && cond.excitation.mode == ExcitationMode::SelfExcited {
                outcome = Outcome::Diverged {
                    time: t,
                    cause: DivergenceCause::ExcitationCeiling,
                    detail: format!("Ef reached its ceiling {} pu", cond.excitation.ef_ceiling),
                };
                break;
            }
            if k == n {
                break;
            }

            let mut stage_clamped = false;
            let next = step(&x.to_array(), dt, self.integrator.method, |s| {
                let s = FluxState::from_array(*s);
                derivative(&a, &cond.excitation, self.rectifier_gain, speed, &s, &mut stage_clamped)
                    .map(|d| d.to_array())
            });
            meta.ef_ceiling_reached |= stage_clamped;
            match next {
                Ok(v) => x = FluxState::from_array(v),
                Err(err) => {
                    outcome = Outcome::Diverged {
                        time: t,
                        cause: DivergenceCause::NonFinite,
                        detail: err.to_string(),
                    };
                    break;
                }
            }
            active = Some(a);
        }
        meta.outcome = Some(outcome);
        Ok(TimeSeries { samples, metadata: meta })
    }

    fn activate(&self, cached: Option<Active>, load: Load, x_md: f64) -> Result<Active, SimError> {
        if let Some(a) = cached {
            if a.load == load && a.x_md_bits == x_md.to_bits() {
                return Ok(a);
            }
        }
        let params = rescale_saturated_parameters(&self.derived, x_md);
        let (r_load, eliminate) = match load {
            Load::Open => (self.model.open_circuit_resistance, self.model.open_terminal_elimination),
            Load::Resistive(r) => (r, false),
        };
        let oc = OperatingCondition {
            load_resistance: r_load,
            speed: self.model.speed,
        };
        let m = assemble_matrices(&params, &oc, self.model.field_time_constant)?;
        Ok(Active {
            load,
            x_md_bits: x_md.to_bits(),
            params,
            m,
            eliminate,
            r_load,
        })
    }

    fn sample(
        &self,
        a: &Active,
        exc: &ExcitationConfig,
        x: &FluxState,
        t: f64,
        clamped: &mut bool,
    ) -> Result<Sample, NumericalError> {
        let speed = self.model.speed;
        let i = a.m.a3 * x.to_vector();
        let (i_d, i_q) = (i[0], i[1]);
        let (v_d, v_q) = voltage(a, x, speed);
        let emf = excitation_emf(exc, self.rectifier_gain, v_d, v_q, &a.params);
        *clamped |= emf.clamped;
        let dx = if a.eliminate {
            open_terminal_derivative(&a.m, x, emf.ef)?
        } else {
            state_derivative(&a.m, x, emf.ef)?
        };
        let theta = self.model.initial_angle + self.derived.omega_e * speed * t;
        Ok(Sample {
                t,
                psi: *x,
                i_d,
                i_q,
                v_d,
                v_q,
                v_abc: inverse_park(v_d, v_q, theta),
                i_abc: inverse_park(i_d, i_q, theta),
                ef: emf.ef,
                x_md_sat: a.params.elements.x_md,
                t_e: electromagnetic_torque(x, (i_d, i_q)),
            dpsi_dq: (dx.psi_d, dx.psi_q),
        })
    }
}

fn voltage(a: &Active, x: &FluxState, speed: f64) -> (f64, f64) {
    if a.eliminate {
        open_terminal_voltage(x, speed)
    } else {
        let i = a.m.a3 * x.to_vector();
        (a.r_load * i[0], a.r_load * i[1])
    }
}

fn derivative(
    a: &Active,
    exc: &ExcitationConfig,
    gain: f64,
    speed: f64,
    x: &FluxState,
    clamped: &mut bool,
) -> Result<FluxState, NumericalError> {
    let (v_d, v_q) = voltage(a, x, speed);
    let emf = excitation_emf(exc, gain, v_d, v_q, &a.params);
    *clamped |= emf.clamped;
    if a.eliminate {
        open_terminal_derivative(&a.m, x, emf.ef)
    } else {
        state_derivative(&a.m, x, emf.ef)
    }
}
