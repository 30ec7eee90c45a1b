//! Trace CSV and log-log SVG emission.

use crate::error::{HarnessError, Result};
use fwlab_core::{IterateTrace, Measure, Scalar};
use std::fmt::Write as _;
use std::path::Path;

pub const CSV_COLUMNS: [&str; 8] = [
    "t",
    "eta",
    "f",
    "gap",
    "min_gap",
    "primaldual",
    "subopt_ref",
    "subopt_certified",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn write_trace_csv<S: Scalar>(path: &Path, trace: &IterateTrace<S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in &trace.records {
        let vals = [r.eta, r.f, r.gap, r.min_gap, r.primaldual, r.subopt, r.subopt_certified];
        let mut row = Vec::with_capacity(8);
        row.push(r.t.to_string());
        row.extend(vals.iter().map(|v| fmt17(v.to_f64())));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn csv_column(m: Measure) -> &'static str {
    match m {
        Measure::Subopt => "subopt_ref",
        other => other.name(),
    }
}

/// `(t, value)` of one column of a trace CSV.
pub fn read_trace_column(path: &Path, m: Measure) -> Result<Vec<(usize, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = csv_column(m);
    let idx = headers.iter().position(|h| h == col).ok_or_else(|| HarnessError::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: format!("no column {col:?}"),
    })?;
    let ti = headers.iter().position(|h| h == "t").ok_or_else(|| HarnessError::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "no column \"t\"".into(),
    })?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |msg: String| HarnessError::Parse {
            path: path.to_path_buf(),
            line: k + 2,
            msg,
        };
        let t = rec[ti].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let v = rec[idx].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        out.push((t, v));
    }
    Ok(out)
}

/// Roughly `per_decade` log-spaced points of a series, always keeping the last.
pub fn thin_log(series: &[(usize, f64)], per_decade: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut next = 1.0f64;
    let step = 10f64.powf(1.0 / per_decade as f64);
    for (k, &(t, v)) in series.iter().enumerate() {
        if t == 0 {
            continue;
        }
        if t as f64 >= next || k + 1 == series.len() {
            out.push((t, v));
            while next <= t as f64 {
                next *= step;
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PlotLine {
    pub label: String,
    pub points: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub lines: Vec<PlotLine>,
}

/// Guide `O(t^{slope})` drawn through the first line of each panel at `t = T/100`.
#[derive(Clone, Debug)]
pub struct Guide {
    pub label: String,
    pub slope: f64,
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const W: f64 = 360.0;
const H: f64 = 300.0;
const ML: f64 = 56.0;
const MR: f64 = 12.0;
const MT: f64 = 28.0;
const MB: f64 = 40.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Side-by-side log-log panels with guide lines and an optional vertical
/// marker at `threshold`.
pub fn render_svg(panels: &[Panel], guides: &[Guide], threshold: Option<usize>, t_max: usize) -> String {
    let width = W * panels.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{}" font-family="sans-serif" font-size="10">"#,
        H + 20.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        panel_svg(&mut s, panel, guides, threshold, t_max, k as f64 * W);
    }
    s.push_str("</svg>\n");
    s
}

fn panel_svg(s: &mut String, panel: &Panel, guides: &[Guide], threshold: Option<usize>, t_max: usize, x0: f64) {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    let vals: Vec<f64> = panel
        .lines
        .iter()
        .flat_map(|l| l.points.iter().map(|p| p.1))
        .filter(|v| positive(*v))
        .collect();
    let (mut lo, mut hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.log10()), b.max(v.log10())));
    if !lo.is_finite() {
        lo = -1.0;
        hi = 0.0;
    }
    lo = lo.floor();
    hi = hi.ceil().max(lo + 1.0);
    let tx_hi = (t_max.max(10) as f64).log10().ceil();
    let px = |t: f64| x0 + ML + (t.log10() / tx_hi) * (W - ML - MR);
    let py = |v: f64| MT + (hi - v.log10()) / (hi - lo) * (H - MT - MB);
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x0 + ML,
        W - ML - MR,
        H - MT - MB
    );
    let _ = writeln!(s, r#"<text x="{}" y="16" text-anchor="middle" font-size="12">{}</text>"#, x0 + W / 2.0, esc(&panel.title));
    for d in 0..=tx_hi as i32 {
        let x = px(10f64.powi(d));
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"#, H - MB + 14.0);
    }
    let step = ((hi - lo) / 6.0).ceil().max(1.0) as i32;
    let mut d = lo as i32;
    while d <= hi as i32 {
        let y = py(10f64.powi(d));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, x0 + ML - 4.0, y + 3.0);
        d += step;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#, x0 + W / 2.0, H - 6.0);
    if let Some(t) = threshold.filter(|t| *t >= 1 && *t <= t_max) {
        let x = px(t as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{MT}" x2="{x:.1}" y2="{}" stroke="gray" stroke-dasharray="4 3"/><text x="{:.1}" y="{}" fill="gray">S</text>"#,
            H - MB,
            x + 2.0,
            MT + 10.0
        );
    }
    if let Some(first) = panel.lines.first() {
        let t_anchor = (t_max / 100).max(1);
        let anchor = first.points.iter().filter(|(t, v)| *t >= t_anchor && positive(*v)).copied().next();
        if let Some((ta, va)) = anchor {
            for (g, guide) in guides.iter().enumerate() {
                let (t1, t2) = (ta as f64, t_max as f64);
                let v2 = va * (t2 / t1).powf(guide.slope);
                if !positive(v2) || v2.log10() < lo {
                    continue;
                }
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-opacity="0.5" stroke-dasharray="{} 2"/>"#,
                    px(t1),
                    py(va),
                    px(t2),
                    py(v2),
                    2 + 2 * g
                );
                let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="gray">{}</text>"#, px(t2) - 40.0, py(v2) - 3.0, esc(&guide.label));
            }
        }
    }
    for (k, line) in panel.lines.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let pts: Vec<String> = line
            .points
            .iter()
            .filter(|(t, v)| *t >= 1 && positive(*v))
            .map(|(t, v)| format!("{:.1},{:.1}", px(*t as f64), py(*v)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.4" points="{}"/>"#, pts.join(" "));
        let ly = MT + 12.0 + 12.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly:.1}" fill="{c}">{}</text>"#, x0 + ML + 6.0, esc(&line.label));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let s = fmt17(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt17(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn thinning_keeps_ends() {
        let s: Vec<(usize, f64)> = (0..=1000).map(|t| (t, 1.0 / (t as f64 + 1.0))).collect();
        let th = thin_log(&s, 10);
        assert_eq!(th.first().unwrap().0, 1);
        assert_eq!(th.last().unwrap().0, 1000);
        assert!(th.len() <= 35);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let p = Panel {
            title: "gap".into(),
            lines: vec![PlotLine {
                label: "open-loop-<2>".into(),
                points: (1..100).map(|t| (t, 1.0 / t as f64)).collect(),
            }],
        };
        let g = Guide {
            label: "t^-1".into(),
            slope: -1.0,
        };
        let svg = render_svg(&[p], &[g], Some(10), 100);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;2&gt;"));
        assert!(svg.contains("<polyline"));
    }
}
