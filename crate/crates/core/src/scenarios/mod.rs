//! Scripted experiments: sudden short circuit, sudden open circuit,
//! self-excited build-up and a generic load step.

pub mod metrics;

use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::excitation::ExcitationMode;
use crate::perunit::DerivedParameters;

/// Stator termination.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Load {
    /// Open terminals, modelled by the open-circuit surrogate resistance.
    #[default]
    Open,
    /// Per-unit resistance; 0 is a bolted three-phase short.
    Resistive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    SetLoad(f64),
    ShortCircuit,
    OpenCircuit,
    #[serde(rename = "set_Ef")]
    SetEf(f64),
    SetExcitationMode(ExcitationMode),
}

impl Action {
    pub fn label(&self) -> String {
        match self {
            Action::SetLoad(r) => format!("set_load({r})"),
            Action::ShortCircuit => "short_circuit".into(),
            Action::OpenCircuit => "open_circuit".into(),
            Action::SetEf(v) => format!("set_Ef({v})"),
            Action::SetExcitationMode(m) => format!("set_excitation_mode({m:?})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledEvent {
    /// Seconds.
    pub time: f64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    #[serde(default)]
    pub initial_load: Load,
    #[serde(default)]
    pub events: Vec<ScheduledEvent>,
    /// Seconds; used when the integrator section gives no duration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Overrides the configured excitation mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_mode: Option<ExcitationMode>,
    /// Overrides the configured saturation switch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<bool>,
    #[serde(default)]
    pub expect_divergence: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ScenarioScript {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            initial_load: Load::Open,
            events: Vec::new(),
            duration: None,
            excitation_mode: None,
            saturation: None,
            expect_divergence: false,
            notes: Vec::new(),
        }
    }

    pub fn at(mut self, time: f64, action: Action) -> Self {
        self.events.push(ScheduledEvent { time, action });
        self
    }

    pub fn duration(mut self, t: f64) -> Self {
        self.duration = Some(t);
        self
    }

    /// Time of the first event matching `pred`.
    pub fn first_event(&self, pred: impl Fn(&Action) -> bool) -> Option<f64> {
        self.events.iter().find(|e| pred(&e.action)).map(|e| e.time)
    }

    pub fn validate(&self, duration: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Load::Resistive(r) = self.initial_load {
            if !(r >= 0.0 && r.is_finite()) {
                out.push(Violation::new("initial_load", "R_L >= 0", format!("{r}")));
            }
        }
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            let field = format!("events[{i}].time");
            if !(e.time >= 0.0 && e.time <= duration) {
                out.push(Violation::new(
                    &field,
                    "event within [0, duration]",
                    format!("time = {}, duration = {duration}", e.time),
                ));
            }
            if e.time < last {
                out.push(Violation::new(&field, "events time-sorted", format!("{} < {last}", e.time)));
            }
            last = e.time;
            match e.action {
                Action::SetLoad(r) if !(r >= 0.0 && r.is_finite()) => {
                    out.push(Violation::new(format!("events[{i}].action"), "R_L >= 0", format!("{r}")));
                }
                Action::SetEf(v) if !v.is_finite() => {
                    out.push(Violation::new(format!("events[{i}].action"), "finite", format!("{v}")));
                }
                _ => {}
            }
        }
        out
    }
}

/// Field settling allowance before a disturbance, in open-circuit transient constants.
pub const SETTLE_FIELD_CONSTANTS: f64 = 8.0;
/// Minimum pre-fault settling window, in open-circuit transient constants.
pub const MIN_SETTLE_FIELD_CONSTANTS: f64 = 5.0;

fn settle_time(d: &DerivedParameters) -> f64 {
    SETTLE_FIELD_CONSTANTS * d.time_constants.td0_p
}

fn settle_warning(what: &str, t: f64, d: &DerivedParameters) -> Option<String> {
    let min = MIN_SETTLE_FIELD_CONSTANTS * d.time_constants.td0_p;
    (t < min).then(|| {
        format!("warning: {what} at {t} s is earlier than {MIN_SETTLE_FIELD_CONSTANTS} T'd0 = {min:.4} s; pre-event state is not settled")
    })
}

/// Open terminals until `t_fault`, bolted short afterwards, constant Ef.
pub fn scenario_sudden_short_circuit(d: &DerivedParameters, t_fault: Option<f64>) -> ScenarioScript {
    let t_fault = t_fault.unwrap_or_else(|| settle_time(d));
    let mut s = ScenarioScript::new("sudden_short_circuit")
        .at(t_fault, Action::ShortCircuit)
        .duration(t_fault + 2.0);
    s.excitation_mode = Some(ExcitationMode::Separate);
    s.notes.extend(settle_warning("short circuit", t_fault, d));
    s
}

/// Settles open, then shorted, then opens the terminals at `t_open`.
///
/// The short-circuit steady state is reached by re-simulating the short
/// circuit experiment inside the same run.
pub fn scenario_sudden_open_circuit(d: &DerivedParameters, t_open: Option<f64>) -> ScenarioScript {
    let t_short = settle_time(d);
    let t_open = t_open.unwrap_or(t_short + 2.0);
    let recovery = 12.0 * d.time_constants.td0_p;
    let mut s = ScenarioScript::new("sudden_open_circuit")
        .at(t_short.min(t_open), Action::ShortCircuit)
        .at(t_open, Action::OpenCircuit)
        .duration(t_open + recovery);
    s.excitation_mode = Some(ExcitationMode::Separate);
    if t_open - t_short < 10.0 * d.time_constants.td_p {
        s.notes.push(format!(
            "warning: open circuit at {t_open} s leaves less than 10 T'd after the short; short-circuit state is not settled"
        ));
    }
    s
}

/// Separately excited, open terminals, no events.
pub fn scenario_open_circuit(d: &DerivedParameters) -> ScenarioScript {
    let mut s = ScenarioScript::new("open_circuit").duration(12.0 * d.time_constants.td0_p);
    s.excitation_mode = Some(ExcitationMode::Separate);
    s
}

/// Self-excited build-up onto open terminals from remanence.
pub fn scenario_self_excitation() -> ScenarioScript {
    let mut s = ScenarioScript::new("self_excitation").duration(5.0);
    s.excitation_mode = Some(ExcitationMode::SelfExcited);
    s
}

/// Build-up with saturation disabled; the loop has no bound and must diverge.
pub fn scenario_self_excitation_unsaturated() -> ScenarioScript {
    let mut s = scenario_self_excitation();
    s.name = "self_excitation_unsaturated".into();
    s.saturation = Some(false);
    s.expect_divergence = true;
    s
}

/// Separately excited, open until settled, then a resistive load.
pub fn scenario_load_step(d: &DerivedParameters, resistance: f64) -> ScenarioScript {
    let t = settle_time(d);
    let mut s = ScenarioScript::new("load_step")
        .at(t, Action::SetLoad(resistance))
        .duration(t + 2.0);
    s.excitation_mode = Some(ExcitationMode::Separate);
    s
}

pub const BUILTIN_NAMES: [&str; 6] = [
    "sudden_short_circuit",
    "sudden_open_circuit",
    "self_excitation",
    "self_excitation_unsaturated",
    "load_step",
    "open_circuit",
];

pub fn describe(name: &str) -> &'static str {
    match name {
        "sudden_short_circuit" => "open-circuit steady state, then a bolted three-phase short",
        "sudden_open_circuit" => "short-circuit steady state, then the three phases are opened",
        "self_excitation" => "voltage build-up from residual flux through the rectifier loop",
        "self_excitation_unsaturated" => "build-up with saturation disabled (expected to diverge)",
        "load_step" => "open-circuit steady state, then a 1 pu resistive load",
        "open_circuit" => "separately excited, open terminals, no events",
        _ => "",
    }
}

pub fn builtin(name: &str, d: &DerivedParameters) -> Option<ScenarioScript> {
    Some(match name {
        "sudden_short_circuit" => scenario_sudden_short_circuit(d, None),
        "sudden_open_circuit" => scenario_sudden_open_circuit(d, None),
        "self_excitation" => scenario_self_excitation(),
        "self_excitation_unsaturated" => scenario_self_excitation_unsaturated(),
        "load_step" => scenario_load_step(d, 1.0),
        "open_circuit" => scenario_open_circuit(d),
        _ => return None,
    })
}
