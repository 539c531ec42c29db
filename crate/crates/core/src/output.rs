//! CSV traces, metadata sidecars and SVG plots. All files are written atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::OutputError;
use crate::trace::{Sample, TimeSeries, COLUMNS};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `bytes` to a temporary file next to `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io_err(path))?;
    }
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| OutputError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// `trace.csv` -> `trace.meta.json`
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// CSV bytes. `f64` display is the shortest text that parses back to the same value.
pub fn csv_bytes(ts: &TimeSeries) -> Result<Vec<u8>, OutputError> {
    let fail = |e: csv::Error| OutputError::Format {
        path: PathBuf::from("<csv>"),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(fail)?;
    for s in &ts.samples {
        w.write_record(s.row().iter().map(|v| v.to_string())).map_err(fail)?;
    }
    w.into_inner().map_err(|e| OutputError::Format {
        path: PathBuf::from("<csv>"),
        message: e.to_string(),
    })
}

/// Trace plus its `.meta.json` sidecar.
pub fn write_csv(ts: &TimeSeries, path: &Path) -> Result<(), OutputError> {
    write_atomic(path, &csv_bytes(ts)?)?;
    let meta = serde_json::to_vec_pretty(&ts.metadata).map_err(|e| OutputError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(&metadata_path(path), &meta)
}

pub fn read_csv(path: &Path) -> Result<Vec<Sample>, OutputError> {
    let fmt = |message: String| OutputError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| fmt(e.to_string()))?;
    let header = r.headers().map_err(|e| fmt(e.to_string()))?;
    if header.iter().ne(COLUMNS) {
        return Err(fmt(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        let mut row = [0.0; 20];
        if rec.len() != 20 {
            return Err(fmt(format!("row with {} fields", rec.len())));
        }
        for (slot, field) in row.iter_mut().zip(rec.iter()) {
            *slot = field.parse().map_err(|e| fmt(format!("`{field}`: {e}")))?;
        }
        out.push(Sample::from_row(&row));
    }
    Ok(out)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn valid_channels() -> Vec<String> {
    COLUMNS[1..]
        .iter()
        .copied()
        .chain(["|v|", "|i|"])
        .map(String::from)
        .collect()
}

/// Round to a 1-2-5 step.
fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let f = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    f * mag
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained SVG of `channels` against time.
pub fn plot_svg(ts: &TimeSeries, channels: &[String]) -> Result<String, OutputError> {
    if channels.is_empty() {
        return Err(OutputError::NoChannels);
    }
    let probe = Sample::default();
    for c in channels {
        if probe.channel(c).is_none() || c == "t" {
            return Err(OutputError::UnknownChannel {
                name: c.clone(),
                valid: valid_channels(),
            });
        }
    }

    let (w, h) = (960.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 150.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let t: Vec<f64> = ts.samples.iter().map(|s| s.t).collect();
    let series: Vec<Vec<f64>> = channels
        .iter()
        .map(|c| ts.samples.iter().map(|s| s.channel(c).unwrap()).collect())
        .collect();
    let (t0, t1) = match (t.first(), t.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (*a, a + 1.0),
        _ => (0.0, 1.0),
    };
    let (mut y0, mut y1) = series
        .iter()
        .flatten()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !(y0 < y1) {
        let c = if y0.is_finite() { y0 } else { 0.0 };
        (y0, y1) = (c - 1.0, c + 1.0);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |v: f64| ml + (v - t0) / (t1 - t0) * pw;
    let py = |v: f64| mt + (y1 - v) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        ml + pw / 2.0,
        xml_escape(&ts.metadata.scenario)
    );

    let xs = nice_step(t1 - t0, 8);
    let mut v = (t0 / xs).ceil() * xs;
    while v <= t1 + 1e-12 {
        let x = px(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{mt}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            mt + ph,
            mt + ph + 18.0,
            format_tick(v, xs)
        );
        v += xs;
    }
    let ys = nice_step(y1 - y0, 6);
    let mut v = (y0 / ys).ceil() * ys;
    while v <= y1 + 1e-12 {
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            ml + pw,
            ml - 6.0,
            y + 4.0,
            format_tick(v, ys)
        );
        v += ys;
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#,
        ml + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">per unit</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );

    // Min/max per pixel column keeps fast ripple visible as an envelope.
    let columns = pw as usize;
    for (ci, (name, ys)) in channels.iter().zip(&series).enumerate() {
        let color = PALETTE[ci % PALETTE.len()];
        let mut pts = String::new();
        if t.len() <= 2 * columns {
            for (tv, yv) in t.iter().zip(ys) {
                let _ = write!(pts, "{:.2},{:.2} ", px(*tv), py(*yv));
            }
        } else {
            let per = t.len() as f64 / columns as f64;
            for c in 0..columns {
                let a = (c as f64 * per) as usize;
                let b = (((c + 1) as f64 * per) as usize).min(t.len());
                let seg = &ys[a..b];
                let (imin, imax) = seg.iter().enumerate().fold((0, 0), |(lo, hi), (i, v)| {
                    (if *v < seg[lo] { i } else { lo }, if *v > seg[hi] { i } else { hi })
                });
                let (first, second) = if imin <= imax { (imin, imax) } else { (imax, imin) };
                for i in [first, second] {
                    let _ = write!(pts, "{:.2},{:.2} ", px(t[a + i]), py(seg[i]));
                }
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = mt + 16.0 + 18.0 * ci as f64;
        let lx = ml + pw + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

pub fn emit_plot(ts: &TimeSeries, channels: &[String], path: &Path) -> Result<(), OutputError> {
    let svg = plot_svg(ts, channels)?;
    write_atomic(path, svg.as_bytes())
}
