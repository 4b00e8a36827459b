use serde::{Deserialize, Serialize};

use crate::domain::{RunReport, REPORT_CSV_HEADER};
use crate::error::{Error, Result};

pub const AGGREGATE_CSV_HEADER: &str =
    "algo,dist,T,trials,mean_regret,mean_violation,mean_r_plus_v,std_r_plus_v,normalized,mean_wall_time_s";

/// Per-(algorithm, T) summary over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algo: String,
    pub dist: String,
    pub horizon: usize,
    pub trials: usize,
    pub mean_regret: f64,
    pub mean_violation: f64,
    pub mean_r_plus_v: f64,
    /// Sample standard deviation of `r + v` (0 for a single trial).
    pub std_r_plus_v: f64,
    /// `mean_r_plus_v` divided by its value at the smallest `T`.
    pub normalized: f64,
    pub mean_wall_time: Option<f64>,
}

/// Groups reports by algorithm (in `labels` order) and horizon. Reports
/// are summed in the order given, so sorted input gives reproducible sums.
pub fn aggregate(reports: &[RunReport], labels: &[&str]) -> Vec<AggregateRow> {
    let mut horizons: Vec<usize> = reports.iter().map(|r| r.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let mut rows = Vec::new();
    for label in labels {
        let mut base = None;
        for &t in &horizons {
            let group: Vec<&RunReport> =
                reports.iter().filter(|r| r.algo == *label && r.horizon == t).collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&RunReport) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            let mean_rpv = mean(&|r| r.r_plus_v());
            let std = if group.len() > 1 {
                (group.iter().map(|r| (r.r_plus_v() - mean_rpv).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let base = *base.get_or_insert(mean_rpv);
            let wall = group
                .iter()
                .map(|r| r.wall_time)
                .collect::<Option<Vec<f64>>>()
                .map(|w| w.iter().sum::<f64>() / n);
            rows.push(AggregateRow {
                algo: label.to_string(),
                dist: group[0].dist.clone(),
                horizon: t,
                trials: group.len(),
                mean_regret: mean(&|r| r.regret),
                mean_violation: mean(&|r| r.violation),
                mean_r_plus_v: mean_rpv,
                std_r_plus_v: std,
                normalized: mean_rpv / base,
                mean_wall_time: wall,
            });
        }
    }
    rows
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let wall = r.mean_wall_time.map(|w| w.to_string()).unwrap_or_else(|| "NA".into());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.algo,
            r.dist,
            r.horizon,
            r.trials,
            r.mean_regret,
            r.mean_violation,
            r.mean_r_plus_v,
            r.std_r_plus_v,
            r.normalized,
            wall
        ));
    }
    out
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Config(format!("line {line}: cannot parse {field:?}")))
}

fn parse_wall(line: usize, field: &str) -> Result<Option<f64>> {
    if field == "NA" {
        Ok(None)
    } else {
        parse_field(line, field).map(Some)
    }
}

/// Reads either an aggregate CSV or a per-trial CSV (which is aggregated).
pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or_default();
    if header == REPORT_CSV_HEADER {
        let mut reports = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(Error::Config(format!("line {}: expected 12 fields", i + 1)));
            }
            if !labels.iter().any(|l| l == f[1]) {
                labels.push(f[1].to_string());
            }
            reports.push(RunReport {
                trial_id: parse_field(i + 1, f[0])?,
                algo: f[1].into(),
                dist: f[2].into(),
                horizon: parse_field(i + 1, f[3])?,
                m: parse_field(i + 1, f[4])?,
                seed: parse_field(i + 1, f[5])?,
                regret: parse_field(i + 1, f[6])?,
                violation: parse_field(i + 1, f[7])?,
                hindsight_value: parse_field(i + 1, f[9])?,
                v_te: None,
                t_e: parse_field(i + 1, f[10])?,
                wall_time: parse_wall(i + 1, f[11])?,
                total_time: None,
                dual_samples: Vec::new(),
                proxy: false,
                bounds_envelope: false,
                resolved_config: String::new(),
            });
        }
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        return Ok(aggregate(&reports, &refs));
    }
    if header != AGGREGATE_CSV_HEADER {
        return Err(Error::Config(format!("unrecognized CSV header {header:?}")));
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::Config(format!("line {}: expected 10 fields", i + 1)));
            }
            Ok(AggregateRow {
                algo: f[0].into(),
                dist: f[1].into(),
                horizon: parse_field(i + 1, f[2])?,
                trials: parse_field(i + 1, f[3])?,
                mean_regret: parse_field(i + 1, f[4])?,
                mean_violation: parse_field(i + 1, f[5])?,
                mean_r_plus_v: parse_field(i + 1, f[6])?,
                std_r_plus_v: parse_field(i + 1, f[7])?,
                normalized: parse_field(i + 1, f[8])?,
                mean_wall_time: parse_wall(i + 1, f[9])?,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if let Some((x, y)) = xs.iter().zip(ys).find(|(x, y)| !(**x > 0.0 && **y > 0.0)) {
        return Err(Error::NonPositiveFit { horizon: *x as usize, value: *y });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(fit_line(&lx, &ly).0)
}

/// `(slope, intercept, R^2)` of `y` against `ln x`.
pub fn fit_log_linear(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    fit_line(&lx, ys)
}

fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Growth exponent of `mean(r + v)` over the horizon grid of one algorithm.
pub fn fit_growth_slope(rows: &[AggregateRow]) -> Result<f64> {
    if rows.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 grid points, got {}", rows.len())));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.horizon as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_r_plus_v).collect();
    fit_loglog_slope(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub algo: String,
    pub horizon: usize,
    pub mean_r_plus_v: f64,
    pub mean_wall_time: Option<f64>,
}

pub fn timing_rows(rows: &[AggregateRow]) -> Vec<TimingRow> {
    let mut out: Vec<TimingRow> = rows
        .iter()
        .map(|r| TimingRow {
            algo: r.algo.clone(),
            horizon: r.horizon,
            mean_r_plus_v: r.mean_r_plus_v,
            mean_wall_time: r.mean_wall_time,
        })
        .collect();
    out.sort_by_key(|r| r.horizon);
    out
}

/// Aligned text table: `T  Algorithm  Avg. Regret  Avg. Time(s)`.
pub fn render_timing_table(rows: &[TimingRow]) -> String {
    let mut out = format!("{:>8}  {:<10}  {:>12}  {:>12}\n", "T", "Algorithm", "Avg. Regret", "Avg. Time(s)");
    for r in rows {
        let wall = r.mean_wall_time.map(|w| format!("{w:.4}")).unwrap_or_else(|| "NA".into());
        out.push_str(&format!("{:>8}  {:<10}  {:>12.2}  {:>12}\n", r.horizon, r.algo, r.mean_r_plus_v, wall));
    }
    out
}
