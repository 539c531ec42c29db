//! Run configuration: a schema-versioned JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ConfigError, SimError, Violation};
use crate::excitation::ExcitationConfig;
use crate::integrator::IntegratorConfig;
use crate::perunit::{self, DamperResistances, DerivedParameters, MachineParameters, TimeConstantOverrides};
use crate::reference;
use crate::saturation::{fit_froelich, FroelichCurve};
use crate::scenarios::{self, ScenarioScript};
use crate::simulation::{ModelOptions, Simulation};
use crate::trace::{COLUMNS, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedOverrides {
    #[serde(default)]
    pub time_constants: TimeConstantOverrides,
    #[serde(default)]
    pub damper_resistances: DamperResistances,
}

/// Either pre-fitted Froelich constants or two OCC anchors `[I_f, psi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_low: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_high: Option<[f64; 2]>,
}

fn default_true() -> bool {
    true
}

impl Default for SaturationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            a: Some(reference::FROELICH_A),
            b: Some(reference::FROELICH_B),
            anchor_low: None,
            anchor_high: None,
        }
    }
}

impl SaturationConfig {
    fn validate(&self) -> Vec<Violation> {
        let constants = self.a.is_some() || self.b.is_some();
        let anchors = self.anchor_low.is_some() || self.anchor_high.is_some();
        let mut out = Vec::new();
        if constants && anchors {
            out.push(Violation::new(
                "a",
                "constants or anchors",
                "give either {a, b} or {anchor_low, anchor_high}, not both",
            ));
        } else if constants && (self.a.is_none() || self.b.is_none()) {
            let missing = if self.a.is_none() { "a" } else { "b" };
            out.push(Violation::new(missing, "constants or anchors", "both a and b are required"));
        } else if anchors && (self.anchor_low.is_none() || self.anchor_high.is_none()) {
            let missing = if self.anchor_low.is_none() { "anchor_low" } else { "anchor_high" };
            out.push(Violation::new(missing, "constants or anchors", "both anchors are required"));
        } else if self.enabled && !constants && !anchors {
            out.push(Violation::new(
                "enabled",
                "constants or anchors",
                "saturation enabled without {a, b} or anchors",
            ));
        }
        out
    }

    /// Fitted curve and a description of where it came from.
    pub fn curve(&self, x_md_unsat: f64) -> Result<Option<(FroelichCurve, String)>, SimError> {
        if !self.enabled {
            return Ok(None);
        }
        if let (Some(a), Some(b)) = (self.a, self.b) {
            let c = FroelichCurve::from_constants(a, b, x_md_unsat)?;
            return Ok(Some((c, format!("constants a = {a}, b = {b}"))));
        }
        if let (Some(lo), Some(hi)) = (self.anchor_low, self.anchor_high) {
            let c = fit_froelich((lo[0], lo[1]), (hi[0], hi[1]), x_md_unsat)?;
            return Ok(Some((
                c,
                format!("anchors {lo:?}, {hi:?} fitted to a = {}, b = {}", c.a, c.b),
            )));
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Name(String),
    Inline(ScenarioScript),
}

impl Default for ScenarioRef {
    fn default() -> Self {
        ScenarioRef::Name("sudden_short_circuit".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_channels")]
    pub plot_channels: Vec<String>,
}

fn default_directory() -> String {
    "output".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Svg]
}
fn default_channels() -> Vec<String> {
    ["v_a", "v_b", "v_c"].map(String::from).to_vec()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            formats: default_formats(),
            plot_channels: default_channels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub machine: MachineParameters,
    #[serde(default)]
    pub derived_overrides: DerivedOverrides,
    #[serde(default)]
    pub saturation: SaturationConfig,
    #[serde(default)]
    pub excitation: ExcitationConfig,
    #[serde(default)]
    pub model: ModelOptions,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Channels accepted by the plotter.
pub fn plot_channel_names() -> Vec<&'static str> {
    COLUMNS[1..].iter().copied().chain(["|v|", "|i|"]).collect()
}

pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

impl RunConfig {
    /// The bundled reference machine with default sections.
    pub fn reference() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            machine: reference::machine(),
            derived_overrides: DerivedOverrides {
                time_constants: reference::example_time_constants(),
                damper_resistances: DamperResistances::default(),
            },
            saturation: SaturationConfig::default(),
            excitation: ExcitationConfig::default(),
            model: ModelOptions::default(),
            integrator: IntegratorConfig::default(),
            scenario: ScenarioRef::default(),
            output: OutputConfig::default(),
        }
    }

    /// Every violation across all sections, with dotted field paths.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let sections: [(&str, Vec<Violation>); 5] = [
            ("machine", perunit::validate(&self.machine)),
            ("saturation", self.saturation.validate()),
            ("excitation", self.excitation.validate()),
            ("model", self.model.validate()),
            ("integrator", self.integrator.validate()),
        ];
        for (prefix, vs) in sections {
            out.extend(vs.into_iter().map(|v| v.under(prefix)));
        }
        let tc = &self.derived_overrides.time_constants;
        for (name, v) in [
            ("Td0_p", tc.td0_p),
            ("Td0_pp", tc.td0_pp),
            ("Tq0_p", tc.tq0_p),
            ("Tq0_pp", tc.tq0_pp),
            ("Td_p", tc.td_p),
            ("Td_pp", tc.td_pp),
            ("Tq_p", tc.tq_p),
            ("Tq_pp", tc.tq_pp),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    out.push(Violation::new(
                        format!("derived_overrides.time_constants.{name}"),
                        "time constant > 0",
                        format!("{v}"),
                    ));
                }
            }
        }
        let r = &self.derived_overrides.damper_resistances;
        for (name, v) in [("R_1d", r.r_1d), ("R_1q", r.r_1q), ("R_2q", r.r_2q)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    out.push(Violation::new(
                        format!("derived_overrides.damper_resistances.{name}"),
                        "resistance > 0",
                        format!("{v}"),
                    ));
                }
            }
        }
        let valid = plot_channel_names();
        for (i, c) in self.output.plot_channels.iter().enumerate() {
            if !valid.contains(&c.as_str()) {
                out.push(Violation::new(
                    format!("output.plot_channels[{i}]"),
                    "known channel",
                    format!("`{c}`; valid: {}", valid.join(", ")),
                ));
            }
        }
        if let ScenarioRef::Name(name) = &self.scenario {
            if !scenarios::BUILTIN_NAMES.contains(&name.as_str()) {
                out.push(Violation::new(
                    "scenario",
                    "known scenario",
                    format!("`{name}`; available: {}", scenarios::BUILTIN_NAMES.join(", ")),
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(ConfigError::Invalid { violations });
        }
        match self.derive() {
            Ok(_) => Ok(()),
            Err(SimError::Config(e)) => Err(e),
            Err(e) => Err(ConfigError::Invalid {
                violations: vec![Violation::new("machine", "derivable parameters", e.to_string())],
            }),
        }
    }

    pub fn derive(&self) -> Result<DerivedParameters, SimError> {
        DerivedParameters::derive(
            &self.machine,
            &self.derived_overrides.damper_resistances,
            &self.derived_overrides.time_constants,
        )
    }

    /// SHA-256 of the canonical serialisation of the resolved configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Resolve the scenario (by override name, or from the config).
    pub fn scenario_script(&self, d: &DerivedParameters, name: Option<&str>) -> Result<ScenarioScript, ConfigError> {
        let unknown = |name: &str| ConfigError::UnknownScenario {
            name: name.into(),
            available: scenarios::BUILTIN_NAMES.map(String::from).to_vec(),
        };
        match (name, &self.scenario) {
            (Some(n), _) => scenarios::builtin(n, d).ok_or_else(|| unknown(n)),
            (None, ScenarioRef::Name(n)) => scenarios::builtin(n, d).ok_or_else(|| unknown(n)),
            (None, ScenarioRef::Inline(s)) => Ok(s.clone()),
        }
    }

    pub fn simulation(&self) -> Result<Simulation, SimError> {
        let derived = self.derive()?;
        let saturation = self.saturation.curve(derived.x_md_unsat)?;
        let rectifier_gain = self
            .excitation
            .rectifier_gain
            .unwrap_or_else(|| reference::default_rectifier_gain(&self.machine));
        let echo = serde_json::json!({
            "config": self,
            "derived": derived,
            "rectifier_gain": rectifier_gain,
            "saturation_source": saturation.as_ref().map(|(_, s)| s.clone()),
            "notes": [perunit::TQ_P_NOTE],
        });
        Ok(Simulation {
            derived,
            saturation: saturation.map(|(c, _)| c),
            excitation: self.excitation,
            rectifier_gain,
            model: self.model,
            integrator: self.integrator,
            config_hash: self.hash(),
            echo,
        })
    }
}
