//! Plain-text tables and SVG charts.

use std::fmt::Write as _;

use super::gain::GainAnalysis;
use super::metrics::MetricReport;
use super::stats::{quantile_sorted, Description};
use super::sweep::SweepResult;
use crate::scalar::Scalar;

/// Left-aligned first column, right-aligned rest.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut parts = Vec::new();
        for (i, (cell, w)) in cells.zip(&widths).enumerate() {
            parts.push(if i == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") });
        }
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut rule.iter().map(String::as_str));
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

fn f<S: Scalar>(v: S) -> String {
    format!("{:.4}", v.as_f64())
}

pub fn metric_table<S: Scalar>(reports: &[MetricReport<S>]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut header = vec!["query"];
    header.extend(reports.iter().map(|r| r.metric.as_str()));
    let mut rows: Vec<Vec<String>> = first
        .per_query
        .keys()
        .map(|q| {
            let mut row = vec![q.clone()];
            row.extend(reports.iter().map(|r| r.per_query.get(q).map_or("-".into(), |v| f(*v))));
            row
        })
        .collect();
    let mut mean = vec![format!("mean (n={})", first.per_query.len())];
    mean.extend(reports.iter().map(|r| f(r.mean)));
    rows.push(mean);
    text_table(&header, &rows)
}

pub fn sweep_table<S: Scalar>(sweep: &SweepResult<S>) -> String {
    let rows: Vec<Vec<String>> = sweep
        .points
        .iter()
        .map(|p| {
            let mark = if p.alpha == sweep.best_alpha { "*" } else { "" };
            vec![format!("{:.2}", p.alpha.as_f64()), f(p.value), mark.into()]
        })
        .collect();
    text_table(&["alpha", &sweep.metric, "best"], &rows)
}

pub fn description_table<S: Scalar>(label: &str, d: &Description<S>) -> String {
    let header = [
        "", "n", "mean", "std", "min", "q10", "q25", "median", "q75", "max", "skew", "kurt", "std/mean",
    ];
    let row = vec![
        label.to_string(),
        d.n.to_string(),
        f(d.mean),
        f(d.std),
        f(d.min),
        f(d.q10),
        f(d.q25),
        f(d.median),
        f(d.q75),
        f(d.max),
        f(d.skewness),
        f(d.kurtosis),
        f(d.std_over_mean),
    ];
    text_table(&header, &[row])
}

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn open(&self, xlabel: &str, ylabel: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let (l, r, t, b) = (PAD, W - PAD, PAD, H - PAD);
        let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
        for (v, label) in [(self.x0, self.x0), (self.x1, self.x1)] {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label:.2}</text>"#, self.x(v), b + 14.0);
        }
        for v in [self.y0, self.y1] {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, l - 4.0, self.y(v) + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 10.0);
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
            H / 2.0,
            H / 2.0
        );
        s
    }
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    let pts: Vec<String> = points.map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
    format!(r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, pts.join(" "))
}

/// Metric against alpha, with a diamond at the best alpha.
pub fn sweep_svg<S: Scalar>(sweep: &SweepResult<S>) -> String {
    let values: Vec<f64> = sweep.points.iter().map(|p| p.value.as_f64()).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame::new(0.0, 1.0, lo, hi);
    let mut s = frame.open("alpha", &sweep.metric);
    s.push_str(&polyline(sweep.points.iter().map(|p| (frame.x(p.alpha.as_f64()), frame.y(p.value.as_f64())))));
    s.push('\n');
    for p in &sweep.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#,
            frame.x(p.alpha.as_f64()),
            frame.y(p.value.as_f64())
        );
    }
    let (cx, cy) = (frame.x(sweep.best_alpha.as_f64()), frame.y(sweep.best_value.as_f64()));
    let _ = writeln!(
        s,
        r#"<path d="M{:.1} {cy:.1} L{cx:.1} {:.1} L{:.1} {cy:.1} L{cx:.1} {:.1} Z" fill="crimson"/>"#,
        cx - 7.0,
        cy - 7.0,
        cx + 7.0,
        cy + 7.0
    );
    s.push_str("</svg>\n");
    s
}

/// Empirical CDF of the gains, with a dashed line at zero.
pub fn gain_cdf_svg<S: Scalar>(gains: &GainAnalysis<S>) -> String {
    let mut values: Vec<f64> = gains.gains().iter().map(|g| g.as_f64()).collect();
    values.sort_by(f64::total_cmp);
    let lo = values.first().copied().unwrap_or(0.0).min(0.0);
    let hi = values.last().copied().unwrap_or(0.0).max(0.0);
    let frame = Frame::new(lo, hi, 0.0, 1.0);
    let mut s = frame.open("similarity gain", "fraction of pairs");
    let n = values.len() as f64;
    let steps = values.iter().enumerate().flat_map(|(i, &v)| {
        [(frame.x(v), frame.y(i as f64 / n)), (frame.x(v), frame.y((i + 1) as f64 / n))]
    });
    s.push_str(&polyline(steps));
    s.push('\n');
    let zx = frame.x(0.0);
    let _ = writeln!(
        s,
        r#"<line x1="{zx:.1}" y1="{PAD}" x2="{zx:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
        H - PAD
    );
    s.push_str("</svg>\n");
    s
}

/// Box plot of the gains: quartile box, median line, min/max whiskers.
pub fn gain_box_svg<S: Scalar>(gains: &GainAnalysis<S>) -> String {
    let mut values: Vec<f64> = gains.gains().iter().map(|g| g.as_f64()).collect();
    values.sort_by(f64::total_cmp);
    if values.is_empty() {
        values.push(0.0);
    }
    let q = |p| quantile_sorted(&values, p);
    let (min, q1, med, q3, max) = (values[0], q(0.25), q(0.5), q(0.75), values[values.len() - 1]);
    let frame = Frame::new(0.0, 1.0, min.min(0.0), max.max(0.0));
    let mut s = frame.open("", "similarity gain");
    let (l, r, c) = (frame.x(0.35), frame.x(0.65), frame.x(0.5));
    let _ = writeln!(s, r#"<line x1="{c:.1}" y1="{:.1}" x2="{c:.1}" y2="{:.1}" stroke="black"/>"#, frame.y(min), frame.y(max));
    let _ = writeln!(
        s,
        r#"<rect x="{l:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="lightsteelblue" stroke="black"/>"#,
        frame.y(q3),
        r - l,
        frame.y(q1) - frame.y(q3)
    );
    for (v, colour) in [(min, "black"), (med, "crimson"), (max, "black")] {
        let _ = writeln!(
            s,
            r#"<line x1="{l:.1}" y1="{y:.1}" x2="{r:.1}" y2="{y:.1}" stroke="{colour}"/>"#,
            y = frame.y(v)
        );
    }
    s.push_str("</svg>\n");
    s
}
