//! CSV, JSON and SVG writers. Nothing here depends on the clock, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use landau_core::exterior::ClusterTable;
use landau_core::numerics::BigReal;
use landau_core::rates::RateEstimate;
use landau_core::toeplitz::EigSequence;

use crate::config::JobConfig;
use crate::CliError;

/// Writes to `path`, or stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Compute(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Compute(format!("writing stdout: {e}")))
        }
    }
}

/// Significant digits for a working precision.
pub fn digits(prec: u32) -> usize {
    (prec as usize / 4).max(8)
}

/// `## key = value` lines for result metadata (kept apart from the `# `
/// config echo).
fn meta(s: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(s, "## {key} = {value}");
}

pub fn spectrum_csv(job: &JobConfig, seq: &EigSequence, rates: &RateEstimate) -> String {
    let d = digits(seq.prec_bits);
    let mut s = job.header();
    meta(&mut s, "q", seq.q);
    meta(&mut s, "truncation", seq.n);
    meta(&mut s, "stabilized_count", seq.stabilized_count);
    meta(&mut s, "shortfall", seq.shortfall);
    meta(&mut s, "index_offset", seq.index_offset);
    s.push_str("n,s_n,log10_s_n,r_n\n");
    for (i, v) in seq.values.iter().take(seq.stabilized_count).enumerate() {
        let n = i + seq.index_offset;
        let log10 = if v.is_positive() {
            v.log10().to_decimal(d)
        } else {
            String::new()
        };
        let r = rates
            .point(n)
            .map(|p| p.r.to_decimal(d))
            .unwrap_or_default();
        let _ = writeln!(s, "{n},{},{log10},{r}", v.to_decimal(d));
    }
    s
}

pub fn cluster_csv(job: &JobConfig, table: &ClusterTable, extra: &[(String, String)]) -> String {
    let mut s = job.header();
    meta(&mut s, "level", fmt_f64(table.level));
    meta(&mut s, "floor", fmt_f64(table.floor));
    meta(&mut s, "floor_reached", table.floor_reached);
    meta(&mut s, "channels", format!("{}..={}", table.channels.0, table.channels.1));
    for (k, v) in extra {
        meta(&mut s, k, v);
    }
    s.push_str("q,n,m,lambda,gap,r_n\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.q,
            r.n,
            r.m,
            fmt_f64(r.lambda),
            fmt_f64(r.gap),
            fmt_f64(r.r_n)
        );
    }
    s
}

/// Shortest round-trip representation in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Rows of a spectrum CSV: `(n, s_n)`, plus the `prec` it was written with
/// if the config echo carries one.
pub fn read_spectrum_csv(text: &str, fallback_prec: u32) -> Result<(Vec<(usize, BigReal)>, u32), CliError> {
    let mut prec = fallback_prec;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                if k.trim() == "prec" {
                    prec = v
                        .trim()
                        .parse()
                        .map_err(|e| CliError::Usage(format!("bad prec in input header: {e}")))?;
                }
            }
        }
    }
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if !line.starts_with("n,s_n") {
                return Err(CliError::Usage(format!("line {}: expected header `n,s_n,...`", i + 1)));
            }
            header_seen = true;
            continue;
        }
        let mut cols = line.split(',');
        let bad = || CliError::Usage(format!("line {}: malformed row", i + 1));
        let n: usize = cols.next().and_then(|c| c.trim().parse().ok()).ok_or_else(bad)?;
        let s = cols
            .next()
            .ok_or_else(bad)
            .and_then(|c| BigReal::parse(c.trim(), prec).map_err(|_| bad()))?;
        if let Some((last, _)) = rows.last() {
            if n != last + 1 {
                return Err(CliError::Usage(format!("line {}: index {n} does not follow {last}", i + 1)));
            }
        }
        rows.push((n, s));
    }
    if rows.is_empty() {
        return Err(CliError::Usage("input has no data rows".into()));
    }
    Ok((rows, prec))
}

/// `r_n` against `1/n` as a polyline, with the limit estimate as a dashed
/// line at `1/n = 0`.
pub fn rate_svg(rates: &RateEstimate, title: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 20.0, 30.0, 50.0);
    let pts: Vec<(f64, f64)> = rates
        .points
        .iter()
        .map(|p| (1.0 / p.n as f64, p.r.to_f64()))
        .filter(|(_, y)| y.is_finite())
        .collect();
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    if let Some(l) = rates.limit_est {
        ys.push(l);
    }
    let x_max = pts.iter().map(|p| p.0).fold(0.0, f64::max).max(1e-12);
    let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (y_min, y_max) = if y_min.is_finite() && y_max > y_min {
        (y_min, y_max)
    } else {
        (y_min.min(0.0) - 1.0, y_max.max(0.0) + 1.0)
    };
    let sx = |x: f64| left + (w - left - right) * x / x_max;
    let sy = |y: f64| top + (h - top - bottom) * (y_max - y) / (y_max - y_min);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (left, h - bottom, w - right, top);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">1/n</text>"#,
        (x0 + x1) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">r_n</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for (v, y) in [(y_min, y0), (y_max, y1)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.4}</text>"#,
            x0 - 4.0,
            y + 4.0
        );
    }
    for (v, x) in [(0.0, x0), (x_max, x1)] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{v:.4}</text>"#,
            y0 + 14.0
        );
    }
    if let Some(l) = rates.limit_est {
        let y = sy(l);
        let _ = writeln!(
            s,
            r#"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#
        );
    }
    let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        poly.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
