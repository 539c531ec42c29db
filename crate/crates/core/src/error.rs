use std::path::PathBuf;

use thiserror::Error;

/// A single failed check, addressed by the field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Dotted field path, e.g. `machine.Xd_pp`.
    pub field: String,
    /// Short name of the rule that failed, e.g. `reactance chain d-axis`.
    pub rule: String,
    pub detail: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
            detail: detail.into(),
        }
    }

    /// Same violation with `prefix.` prepended to the field path.
    pub fn under(mut self, prefix: &str) -> Self {
        self.field = format!("{prefix}.{}", self.field);
        self
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} ({})", self.field, self.rule, self.detail)
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("zero base quantity for `{what}`")]
    ZeroBase { what: &'static str },

    #[error("missing time constants; supply each value or the damper resistance it derives from:\n{}", .missing.join("\n"))]
    MissingTimeConstants { missing: Vec<String> },

    #[error("invalid configuration:\n{}", join(.violations))]
    Invalid { violations: Vec<Violation> },

    #[error("failed to parse {path} at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("unsupported schema_version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("unknown scenario `{name}`; available: {}", .available.join(", "))]
    UnknownScenario { name: String, available: Vec<String> },

    #[error("self-excited mode needs a positive residual flux: build-up impossible without remanence")]
    NoRemanence,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParameterError {
    #[error("machine parameters are inconsistent:\n{}", join(.violations))]
    Invalid { violations: Vec<Violation> },

    #[error("element reactance `{element}` is not positive when inverting the {relation} relation (reciprocal {reciprocal})")]
    NonPositiveElement {
        element: &'static str,
        relation: &'static str,
        reciprocal: f64,
    },

    #[error("x_d equals x'_d; the field input coupling x'_d/(x_d - x'_d) is undefined")]
    DegenerateTransient,

    #[error("non-positive {what}: {value}")]
    NonPositive { what: &'static str, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaturationError {
    #[error("OCC anchors do not describe a saturating curve: {reason}")]
    Fit { reason: String },

    #[error("Froelich constants must satisfy a > 0 and b >= 0 (a = {a}, b = {b})")]
    Constants { a: f64, b: f64 },

    #[error("field current must be non-negative, got {0}")]
    NegativeFieldCurrent(f64),

    #[error("air-gap flux {psi_t} is outside the Froelich domain [0, {limit})")]
    Domain { psi_t: f64, limit: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericalError {
    #[error("non-finite derivative in stage {stage}")]
    NonFiniteStage { stage: usize },

    #[error("non-finite state derivative at state {state:?}")]
    NonFiniteDerivative { state: [f64; 6] },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Parameter(#[from] ParameterError),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
    #[error(transparent)]
    Numerical(#[from] NumericalError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("unknown plot channel `{name}`; valid channels: {}", .valid.join(", "))]
    UnknownChannel { name: String, valid: Vec<String> },

    #[error("no plot channels requested")]
    NoChannels,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}
