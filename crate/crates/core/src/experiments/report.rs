use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentKind;
use super::run::TrialRecord;
use crate::error::{Error, Result};

/// Column order of `trials.csv`: one row per (trial, metric).
pub const TRIAL_COLUMNS: [&str; 13] = [
    "experiment",
    "n",
    "seed",
    "rho_target",
    "rho_observed",
    "class_param",
    "algorithm",
    "metric",
    "value",
    "bound",
    "holds",
    "method",
    "status",
];

/// Column order of `summary.csv`: one row per (experiment, n, metric).
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "experiment",
    "n",
    "metric",
    "trials",
    "median",
    "q10",
    "q90",
    "min",
    "max",
    "holds",
];

pub const TIMING_COLUMNS: [&str; 4] = ["experiment", "n", "seed", "wall_time_s"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse {
        path: "<csv>".into(),
        msg: e.to_string(),
    };
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse {
        path: "<csv>".into(),
        msg: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `trials.csv` contents. Trials without values get one row with an empty
/// metric so that failures stay visible.
pub fn trials_csv(table: &[TrialRecord]) -> Result<String> {
    let mut rows = Vec::new();
    for r in table {
        let common = |metric: String, value: String, bound: String, holds: String, method: String| {
            vec![
                r.experiment.to_string(),
                r.n.to_string(),
                r.seed.to_string(),
                r.rho_target.to_string(),
                opt(r.rho_observed),
                opt(r.class_param),
                opt(r.algorithm),
                metric,
                value,
                bound,
                holds,
                method,
                r.status.clone(),
            ]
        };
        if r.values.is_empty() {
            rows.push(common(String::new(), String::new(), String::new(), String::new(), String::new()));
        }
        for v in &r.values {
            rows.push(common(v.metric.clone(), v.value.to_string(), opt(v.bound), opt(v.holds), v.method.clone()));
        }
    }
    to_csv(&TRIAL_COLUMNS, &rows)
}

/// Empirical quantile with linear interpolation between order statistics
/// (position q·(m−1) in the sorted sample).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let pos = q * (m - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub metric: String,
    pub trials: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub min: f64,
    pub max: f64,
    /// (trials where the check held, trials with a check)
    pub holds: Option<(usize, usize)>,
}

pub fn summarize(table: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, String), (ExperimentKind, Vec<f64>, usize, usize)> = BTreeMap::new();
    for r in table {
        for v in &r.values {
            let e = groups
                .entry((r.experiment.to_string(), r.n, v.metric.clone()))
                .or_insert((r.experiment, Vec::new(), 0, 0));
            e.1.push(v.value);
            if let Some(h) = v.holds {
                e.3 += 1;
                if h {
                    e.2 += 1;
                }
            }
        }
    }
    groups
        .into_iter()
        .map(|((_, n, metric), (experiment, mut vals, held, checked))| {
            vals.sort_by(f64::total_cmp);
            SummaryRow {
                experiment,
                n,
                metric,
                trials: vals.len(),
                median: quantile(&vals, 0.5),
                q10: quantile(&vals, 0.1),
                q90: quantile(&vals, 0.9),
                min: vals[0],
                max: vals[vals.len() - 1],
                holds: (checked > 0).then_some((held, checked)),
            }
        })
        .collect()
}

pub fn summary_csv(table: &[TrialRecord]) -> Result<String> {
    let rows: Vec<Vec<String>> = summarize(table)
        .into_iter()
        .map(|s| {
            vec![
                s.experiment.to_string(),
                s.n.to_string(),
                s.metric,
                s.trials.to_string(),
                s.median.to_string(),
                s.q10.to_string(),
                s.q90.to_string(),
                s.min.to_string(),
                s.max.to_string(),
                s.holds.map(|(h, c)| format!("{h}/{c}")).unwrap_or_default(),
            ]
        })
        .collect();
    to_csv(&SUMMARY_COLUMNS, &rows)
}

/// Log-log least squares slope of y against x.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Human-readable summary: per-n medians with the 10–90% range, the
/// empirical log-log rate of each median across n, and check counts.
pub fn summary_txt(table: &[TrialRecord]) -> String {
    let rows = summarize(table);
    let mut out = String::new();
    let mut by_metric: BTreeMap<(String, String), Vec<&SummaryRow>> = BTreeMap::new();
    for r in &rows {
        by_metric.entry((r.experiment.to_string(), r.metric.clone())).or_default().push(r);
    }
    let failed = table.iter().filter(|r| r.status != "ok").count();
    let _ = writeln!(out, "trials: {}  with notes or errors: {failed}", table.len());
    for ((experiment, metric), group) in by_metric {
        let _ = writeln!(out, "\n[{experiment}] {metric}");
        for r in &group {
            let _ = write!(out, "  n = {:>6}  median {:.6}  [q10 {:.6}, q90 {:.6}]  trials {}", r.n, r.median, r.q10, r.q90, r.trials);
            if let Some((h, c)) = r.holds {
                let _ = write!(out, "  holds {h}/{c}");
            }
            out.push('\n');
        }
        let pts: Vec<(f64, f64)> = group.iter().map(|r| (r.n as f64, r.median)).collect();
        if let Some(s) = loglog_slope(&pts) {
            let _ = writeln!(out, "  empirical rate: median ~ n^{s:.4}");
        }
        if metric == "partition_l1" {
            let _ = writeln!(
                out,
                "  necessary-condition test only: the candidate set under-approximates the max over all partitions"
            );
        }
    }
    out.push_str("\nraw errors and rates only; implicit constants of the asymptotic bounds are not validated\n");
    out
}

pub fn timings_csv(table: &[TrialRecord]) -> Result<String> {
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| vec![r.experiment.to_string(), r.n.to_string(), r.seed.to_string(), format!("{:.6}", r.wall_time_s)])
        .collect();
    to_csv(&TIMING_COLUMNS, &rows)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(table: &[TrialRecord], path: &Path) -> Result<()> {
    write(path, &trials_csv(table)?)
}

/// Write `trials.csv`, `summary.csv`, `summary.txt` and `timings.csv` into
/// `dir`. Only `timings.csv` depends on anything but the trial table.
pub fn write_outputs(table: &[TrialRecord], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    emit_csv(table, &dir.join("trials.csv"))?;
    write(&dir.join("summary.csv"), &summary_csv(table)?)?;
    write(&dir.join("summary.txt"), &summary_txt(table))?;
    write(&dir.join("timings.csv"), &timings_csv(table)?)
}
