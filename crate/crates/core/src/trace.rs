//! Recorded simulation traces and their run metadata.

use serde::{Deserialize, Serialize};

use crate::model::FluxState;

/// Fixed CSV column order.
pub const COLUMNS: [&str; 20] = [
    "t", "psi_d", "psi_q", "psi_f", "psi_1d", "psi_1q", "psi_2q", "i_d", "i_q", "v_d", "v_q", "v_a", "v_b",
    "v_c", "i_a", "i_b", "i_c", "Ef", "x_md_sat", "T_e",
];

pub const SCHEMA_VERSION: u32 = 1;

/// One recorded instant. Per unit, time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub psi: FluxState,
    pub i_d: f64,
    pub i_q: f64,
    pub v_d: f64,
    pub v_q: f64,
    pub v_abc: [f64; 3],
    pub i_abc: [f64; 3],
    pub ef: f64,
    pub x_md_sat: f64,
    pub t_e: f64,
    /// Stator flux rates `d psi_d / dt`, `d psi_q / dt` in pu/s. Not written to CSV.
    #[serde(skip)]
    pub dpsi_dq: (f64, f64),
}

impl Sample {
    pub fn row(&self) -> [f64; 20] {
        let p = &self.psi;
        [
            self.t,
            p.psi_d,
            p.psi_q,
            p.psi_f,
            p.psi_1d,
            p.psi_1q,
            p.psi_2q,
            self.i_d,
            self.i_q,
            self.v_d,
            self.v_q,
            self.v_abc[0],
            self.v_abc[1],
            self.v_abc[2],
            self.i_abc[0],
            self.i_abc[1],
            self.i_abc[2],
            self.ef,
            self.x_md_sat,
            self.t_e,
        ]
    }

    pub fn from_row(r: &[f64; 20]) -> Self {
        Self {
            t: r[0],
            psi: FluxState::from_array([r[1], r[2], r[3], r[4], r[5], r[6]]),
            i_d: r[7],
            i_q: r[8],
            v_d: r[9],
            v_q: r[10],
            v_abc: [r[11], r[12], r[13]],
            i_abc: [r[14], r[15], r[16]],
            ef: r[17],
            x_md_sat: r[18],
            t_e: r[19],
            dpsi_dq: (0.0, 0.0),
        }
    }

    pub fn voltage_magnitude(&self) -> f64 {
        self.v_d.hypot(self.v_q)
    }

    pub fn current_magnitude(&self) -> f64 {
        self.i_d.hypot(self.i_q)
    }

    /// Named channel, including the derived `|v|` and `|i|`.
    pub fn channel(&self, name: &str) -> Option<f64> {
        match name {
            "|v|" => Some(self.voltage_magnitude()),
            "|i|" => Some(self.current_magnitude()),
            _ => COLUMNS.iter().position(|c| *c == name).map(|i| self.row()[i]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceCause {
    /// A flux linkage exceeded the divergence threshold.
    FluxThreshold,
    /// The self-excitation loop drove Ef into its ceiling.
    ExcitationCeiling,
    /// The air-gap flux left the saturation curve's domain.
    SaturationDomain,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Diverged {
        time: f64,
        cause: DivergenceCause,
        detail: String,
    },
}

impl Outcome {
    pub fn is_diverged(&self) -> bool {
        matches!(self, Outcome::Diverged { .. })
    }
}

/// State on both sides of a scheduled event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    /// Requested time.
    pub time: f64,
    /// Grid time actually used.
    pub applied_at: f64,
    pub action: String,
    pub state_before: FluxState,
    pub state_after: FluxState,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub scenario: String,
    pub config_hash: String,
    pub binary_version: String,
    pub outcome: Option<Outcome>,
    pub expected_divergence: bool,
    pub ef_ceiling_reached: bool,
    pub events: Vec<EventRecord>,
    pub notes: Vec<String>,
    /// Resolved run inputs (parameters, saturation source, gains).
    pub echo: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    pub metadata: RunMetadata,
}

impl TimeSeries {
    pub fn outcome(&self) -> &Outcome {
        self.metadata.outcome.as_ref().unwrap_or(&Outcome::Completed)
    }

    pub fn last_state(&self) -> Option<FluxState> {
        self.samples.last().map(|s| s.psi)
    }

    /// Samples with `t >= t0`.
    pub fn since(&self, t0: f64) -> &[Sample] {
        let i = self.samples.partition_point(|s| s.t < t0);
        &self.samples[i..]
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let probe = Sample::default();
        probe.channel(name)?;
        Some(self.samples.iter().map(|s| s.channel(name).unwrap()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_round_trip() {
        let r: [f64; 20] = std::array::from_fn(|i| i as f64 * 0.1 - 0.7);
        assert_eq!(Sample::from_row(&r).row(), r);
    }

    #[test]
    fn channels_by_name() {
        let s = Sample {
            v_d: 3.0,
            v_q: 4.0,
            ef: 2.0,
            ..Default::default()
        };
        assert_eq!(s.channel("|v|"), Some(5.0));
        assert_eq!(s.channel("Ef"), Some(2.0));
        assert_eq!(s.channel("nope"), None);
    }

    #[test]
    fn since_slices_by_time() {
        let ts = TimeSeries {
            samples: (0..10)
                .map(|k| Sample {
                    t: k as f64 * 0.5,
                    ..Default::default()
                })
                .collect(),
            ..Default::default()
        };
        assert_eq!(ts.since(2.0).len(), 6);
        assert_eq!(ts.since(100.0).len(), 0);
    }
}
