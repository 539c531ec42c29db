//! Summary diagnostics read from traces.

use serde::Serialize;

use crate::trace::{Sample, TimeSeries};

/// `amplitude * exp(-(t - t0) / tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialTerm {
    pub amplitude: f64,
    pub tau: f64,
}

/// Least-squares fit of `ln y = ln A - (t - t0) / tau`.
///
/// `None` with fewer than three points, any non-positive `y`, or a
/// non-decaying slope.
pub fn log_linear_fit(t: &[f64], y: &[f64], t0: f64) -> Option<ExponentialTerm> {
    if t.len() < 3 || t.len() != y.len() || y.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let n = t.len() as f64;
    let xs: Vec<f64> = t.iter().map(|v| v - t0).collect();
    let ls: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let ml = ls.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxl: f64 = xs.iter().zip(&ls).map(|(x, l)| (x - mx) * (l - ml)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxl / sxx;
    if !(slope < 0.0) {
        return None;
    }
    Some(ExponentialTerm {
        amplitude: (ml - slope * mx).exp(),
        tau: -1.0 / slope,
    })
}

/// Points of a decaying `delta` whose value lies in `[lo, hi] * delta[0]`,
/// up to the first drop below `lo * delta[0]`.
fn band(t: &[f64], delta: &[f64], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut bt, mut bd) = (Vec::new(), Vec::new());
    let Some(&d0) = delta.first() else {
        return (bt, bd);
    };
    for (ti, di) in t.iter().zip(delta) {
        if *di < lo * d0 {
            break;
        }
        if *di <= hi * d0 {
            bt.push(*ti);
            bd.push(*di);
        }
    }
    (bt, bd)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalMetrics {
    pub peak: f64,
    /// Mean over the final 10% of the samples.
    pub sustained: f64,
    /// Time from the first sample until the signal stays within the band.
    pub settling_time: f64,
    /// From a log-linear fit between 10% and 90% of the deviation; `None` if not decaying.
    pub decay_constant: Option<f64>,
}

/// Relative settling band: 2% of the largest deviation from the final value.
pub const SETTLING_BAND: f64 = 0.02;

pub fn signal_metrics(t: &[f64], y: &[f64]) -> Option<SignalMetrics> {
    if t.is_empty() || t.len() != y.len() {
        return None;
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tail = (y.len() / 10).max(1);
    let sustained = y[y.len() - tail..].iter().sum::<f64>() / tail as f64;
    let dev: Vec<f64> = y.iter().map(|v| (v - sustained).abs()).collect();
    let mut max_dev = dev.iter().fold(0.0f64, |m, v| m.max(*v));
    if max_dev <= 1e-12 * sustained.abs().max(1.0) {
        max_dev = 0.0;
    }

    let mut settling_time = 0.0;
    if max_dev > 0.0 {
        if let Some(last_out) = dev.iter().rposition(|d| *d > SETTLING_BAND * max_dev) {
            settling_time = t[(last_out + 1).min(t.len() - 1)] - t[0];
        }
    }

    let decay_constant = if max_dev > 0.0 {
        let start = dev.iter().position(|d| *d == max_dev).unwrap();
        let (bt, bd) = band(&t[start..], &dev[start..], 0.1, 0.9);
        log_linear_fit(&bt, &bd, t[0]).map(|e| e.tau)
    } else {
        None
    };
    Some(SignalMetrics {
        peak,
        sustained,
        settling_time,
        decay_constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeMetrics {
    /// Largest phase-current magnitude `max |i_abc|`.
    pub peak_current: f64,
    /// Mean `|i|` over the final 10%.
    pub sustained_current: f64,
    /// Mean `|v|` over the final 10%.
    pub steady_voltage: f64,
    /// Settling time of `|v|`.
    pub settling_time: f64,
    pub current_decay_constant: Option<f64>,
    pub voltage_decay_constant: Option<f64>,
}

pub fn envelope_metrics(samples: &[Sample]) -> Option<EnvelopeMetrics> {
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let i: Vec<f64> = samples.iter().map(Sample::current_magnitude).collect();
    let v: Vec<f64> = samples.iter().map(Sample::voltage_magnitude).collect();
    let mi = signal_metrics(&t, &i)?;
    let mv = signal_metrics(&t, &v)?;
    let peak_current = samples
        .iter()
        .flat_map(|s| s.i_abc)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Some(EnvelopeMetrics {
        peak_current,
        sustained_current: mi.sustained,
        steady_voltage: mv.sustained,
        settling_time: mv.settling_time,
        current_decay_constant: mi.decay_constant,
        voltage_decay_constant: mv.decay_constant,
    })
}

/// Two-term decomposition of a decaying deviation by successive peeling.
///
/// The slow term is fitted on the late band `slow_band * delta[0]`, the
/// fast term on the residual's `fast_band`.
pub fn peel_exponentials(
    t: &[f64],
    delta: &[f64],
    t0: f64,
    slow_band: (f64, f64),
    fast_band: (f64, f64),
) -> (Option<ExponentialTerm>, Option<ExponentialTerm>) {
    let (st, sd) = band(t, delta, slow_band.0, slow_band.1);
    let Some(slow) = log_linear_fit(&st, &sd, t0) else {
        return (None, None);
    };
    let residual: Vec<f64> = t
        .iter()
        .zip(delta)
        .map(|(ti, di)| di - slow.amplitude * (-(ti - t0) / slow.tau).exp())
        .collect();
    let (ft, fd) = band(t, &residual, fast_band.0, fast_band.1);
    let fast = log_linear_fit(&ft, &fd, t0).filter(|f| f.tau < slow.tau);
    (Some(slow), fast)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortCircuitEnvelope {
    /// Mean `|i|` over the final 10%.
    pub sustained_current: f64,
    /// Envelope extrapolated back to the fault instant.
    pub initial_envelope: f64,
    pub transient: Option<ExponentialTerm>,
    pub subtransient: Option<ExponentialTerm>,
    /// Largest phase current, including the DC offset.
    pub peak_phase_current: f64,
}

/// Filter gain of `[1/4, 1/2, 1/4]` taps at `-h, 0, +h` on `exp(-t/tau)`.
fn tap_gain(h: f64, tau: f64) -> f64 {
    (h / (2.0 * tau)).cosh().powi(2)
}

/// d-axis current envelope after a bolted three-phase short at `t_fault`.
///
/// The rotor-frame current carries the decaying DC offset as a
/// fundamental-frequency ripple. Three taps half an electrical period
/// apart cancel it; decaying exponentials pass with a known gain that is
/// divided out of the fitted amplitudes.
pub fn short_circuit_envelope(ts: &TimeSeries, t_fault: f64, omega: f64) -> Option<ShortCircuitEnvelope> {
    let post = ts.since(t_fault);
    if post.len() < 10 {
        return None;
    }
    let dt = post[1].t - post[0].t;
    let h = (std::f64::consts::PI / (omega * dt)).round() as usize;
    if post.len() < 2 * h + 10 {
        return None;
    }
    let y: Vec<f64> = post.iter().map(|s| -s.i_d).collect();
    let t: Vec<f64> = post[h..post.len() - h].iter().map(|s| s.t).collect();
    let filtered: Vec<f64> = (h..post.len() - h)
        .map(|k| 0.25 * y[k - h] + 0.5 * y[k] + 0.25 * y[k + h])
        .collect();

    let mag: Vec<f64> = post.iter().map(Sample::current_magnitude).collect();
    let tail = (mag.len() / 10).max(1);
    let sustained_current = mag[mag.len() - tail..].iter().sum::<f64>() / tail as f64;
    let ftail = (filtered.len() / 10).max(1);
    let steady = filtered[filtered.len() - ftail..].iter().sum::<f64>() / ftail as f64;

    let delta: Vec<f64> = filtered.iter().map(|v| v - steady).collect();
    let (slow, fast) = peel_exponentials(&t, &delta, t_fault, (0.01, 0.1), (0.1, 0.9));
    let hs = h as f64 * dt;
    let unbias = |e: ExponentialTerm| ExponentialTerm {
        amplitude: e.amplitude / tap_gain(hs, e.tau),
        tau: e.tau,
    };
    let transient = slow.map(unbias);
    let subtransient = fast.map(unbias);
    let initial_envelope = steady
        + transient.map_or(0.0, |e| e.amplitude)
        + subtransient.map_or(0.0, |e| e.amplitude);
    let peak_phase_current = post
        .iter()
        .flat_map(|s| s.i_abc)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    Some(ShortCircuitEnvelope {
        sustained_current,
        initial_envelope,
        transient,
        subtransient,
        peak_phase_current,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryEnvelope {
    /// Mean `|v|` over the final 10%.
    pub final_voltage: f64,
    /// Largest `|i|` after opening.
    pub max_current: f64,
    /// Slow term of the voltage recovery.
    pub dominant: Option<ExponentialTerm>,
    pub fast: Option<ExponentialTerm>,
}

/// Terminal-voltage recovery after the terminals open at `t_open`.
pub fn recovery_envelope(ts: &TimeSeries, t_open: f64) -> Option<RecoveryEnvelope> {
    let post = ts.since(t_open);
    if post.len() < 10 {
        return None;
    }
    let v: Vec<f64> = post.iter().map(Sample::voltage_magnitude).collect();
    let t: Vec<f64> = post.iter().map(|s| s.t).collect();
    let tail = (v.len() / 10).max(1);
    let final_voltage = v[v.len() - tail..].iter().sum::<f64>() / tail as f64;
    let delta: Vec<f64> = v.iter().map(|x| final_voltage - x).collect();
    let (dominant, fast) = peel_exponentials(&t, &delta, t_open, (0.01, 0.3), (0.1, 0.9));
    let max_current = post.iter().map(Sample::current_magnitude).fold(0.0f64, f64::max);
    Some(RecoveryEnvelope {
        final_voltage,
        max_current,
        dominant,
        fast,
    })
}
