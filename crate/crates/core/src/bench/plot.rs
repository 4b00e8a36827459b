use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::aggregate::AggregateRow;
use crate::error::Result;

/// One whitespace-separated file per distribution, one row per
/// `(algo, T)`: `algo T normalized mean_r_plus_v`. With `svg`, a line chart
/// of the normalized series is written next to it.
pub fn emit_plot_data(rows: &[AggregateRow], dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    let mut dists: Vec<&str> = Vec::new();
    for r in rows {
        if !dists.contains(&r.dist.as_str()) {
            dists.push(&r.dist);
        }
    }
    let mut files = Vec::new();
    for dist in dists {
        let subset: Vec<AggregateRow> = rows.iter().filter(|r| r.dist == dist).cloned().collect();
        let mut text = String::from("# algo T normalized mean_r_plus_v\n");
        for r in &subset {
            writeln!(text, "{} {} {} {}", r.algo, r.horizon, r.normalized, r.mean_r_plus_v).unwrap();
        }
        let path = dir.join(format!("plot_{dist}.dat"));
        std::fs::write(&path, text)?;
        files.push(path);
        if svg {
            let path = dir.join(format!("plot_{dist}.svg"));
            std::fs::write(&path, render_svg(&subset, dist))?;
            files.push(path);
        }
    }
    Ok(files)
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Normalized `r + v` against `T` (log axis), one polyline per algorithm.
pub fn render_svg(rows: &[AggregateRow], title: &str) -> String {
    let (w, h, pad) = (640.0, 420.0, 56.0);
    let xs: Vec<f64> = rows.iter().map(|r| (r.horizon as f64).log10()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.normalized).filter(|v| v.is_finite()).collect();
    let (x0, x1) = bounds(&xs);
    let (_, y1) = bounds(&ys);
    let (y0, y1) = (0.0, y1.max(1.0) * 1.05);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}: normalized r+v</text>"#, w / 2.0).unwrap();
    writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    )
    .unwrap();
    let mut decade = x0.floor();
    while decade <= x1 + 1e-9 {
        if decade >= x0 - 1e-9 {
            let x = sx(decade);
            writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">1e{decade}</text>"#, h - pad + 18.0).unwrap();
        }
        decade += 1.0;
    }
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y:.1}</text>"#, pad - 6.0, sy(y) + 4.0).unwrap();
    }
    let mut algos: Vec<&str> = Vec::new();
    for r in rows {
        if !algos.contains(&r.algo.as_str()) {
            algos.push(&r.algo);
        }
    }
    for (i, algo) in algos.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.algo == *algo && r.normalized.is_finite())
            .map(|r| format!("{:.1},{:.1}", sx((r.horizon as f64).log10()), sy(r.normalized)))
            .collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" ")).unwrap();
        let ly = pad + 16.0 * i as f64;
        writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{algo}</text>"#, pad + 10.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}
