use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{SweepReport, SweepRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

const SUMMARY_HEADER: [&str; 8] = [
    "grid_value",
    "prompt_kind",
    "arch",
    "stat_mean",
    "stat_std",
    "stat_min",
    "stat_max",
    "n_trials",
];

fn csv_error(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

fn write_csv(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    for r in records {
        w.write_record(&r).map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn summary_rows(rows: &[SweepRow], normalized: bool) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let s = if normalized { r.normalized } else { r.stat };
            vec![
                r.grid_value.clone(),
                r.prompt_kind.clone(),
                r.arch.clone(),
                num(s.mean),
                num(s.std),
                num(s.min),
                num(s.max),
                r.n_trials.to_string(),
            ]
        })
        .collect()
}

/// The summary CSV.
pub fn csv_body(report: &SweepReport) -> Result<String> {
    write_csv(&SUMMARY_HEADER, summary_rows(&report.rows, false))
}

/// The summary CSV over `ε / ‖C(G)‖`.
pub fn normalized_csv_body(report: &SweepReport) -> Result<String> {
    write_csv(&SUMMARY_HEADER, summary_rows(&report.rows, true))
}

/// Long-format loss traces, one line per retained point.
pub fn traces_csv_body(report: &SweepReport) -> Result<String> {
    let mut records = Vec::new();
    for (i, t) in report.trials.iter().enumerate() {
        if let Some(r) = &t.record {
            for (step, loss) in r.loss_trace.iter().enumerate() {
                records.push(vec![
                    i.to_string(),
                    t.grid_value.clone(),
                    t.prompt_kind.clone(),
                    t.arch.clone(),
                    t.model_index.to_string(),
                    t.repeat_index.to_string(),
                    step.to_string(),
                    num(*loss),
                ]);
            }
        }
    }
    write_csv(
        &[
            "trial",
            "grid_value",
            "prompt_kind",
            "arch",
            "model_index",
            "repeat_index",
            "point",
            "loss",
        ],
        records,
    )
}

/// Equal-width histogram of completed trial values (density-normalized).
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, f64)> {
    let vals: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if vals.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for v in &vals {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = vals.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let left = lo + b as f64 * width;
            (left, left + width, c as f64 / (n * width))
        })
        .collect()
}

fn histogram_csv_body(report: &SweepReport) -> Result<String> {
    let values: Vec<f64> = report
        .trials
        .iter()
        .filter(|t| t.completed)
        .map(|t| t.statistic)
        .collect();
    let records = histogram(&values, report.config.histogram_bins)
        .into_iter()
        .map(|(l, r, d)| vec![num(l), num(r), num(d)]);
    write_csv(&["bin_left", "bin_right", "density"], records)
}

fn fits_csv_body(report: &SweepReport) -> Result<String> {
    let records = report.fits.iter().map(|f| {
        let params: Vec<String> = f.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        vec![
            f.family.name().to_string(),
            f.fixed_dof.to_string(),
            params.join(";"),
            f.n_samples.to_string(),
            num(f.ks_statistic),
            num(f.p_value),
        ]
    });
    write_csv(
        &[
            "family",
            "fixed_dof",
            "params",
            "n_samples",
            "ks_statistic",
            "p_value",
        ],
        records,
    )
}

fn bounds_csv_body(report: &SweepReport) -> Result<String> {
    let records = report.bounds.iter().map(|b| {
        vec![
            serde_json::to_value(b.bound_kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            num(b.theoretical_value),
            num(b.empirical_value),
            num(b.ratio),
            b.holds.to_string(),
            b.config.to_string(),
        ]
    });
    write_csv(
        &[
            "bound_kind",
            "theoretical",
            "empirical",
            "ratio",
            "holds",
            "config",
        ],
        records,
    )
}

/// `<dir>/<stem>.<ext>`, or `<stem>_<n>.<ext>` when taken.
fn unique_path(dir: &Path, stem: &str, ext: &str) -> PathBuf {
    let first = dir.join(format!("{stem}.{ext}"));
    if !first.exists() {
        return first;
    }
    (1..)
        .map(|n| dir.join(format!("{stem}_{n}.{ext}")))
        .find(|p| !p.exists())
        .expect("unbounded suffix search")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes the report under `out_dir` as `<experiment>_<UTC timestamp>.*`.
/// CSV output adds companion files for normalized errors and, when present,
/// traces, histogram, distribution fits and bound checks. Returns the paths
/// written.
pub fn emit_report(
    report: &SweepReport,
    out_dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let mut stem = format!("{}_{stamp}", report.experiment);
    // one suffix for the whole bundle so companions share a stem
    if out_dir.join(format!("{stem}.csv")).exists() || out_dir.join(format!("{stem}.json")).exists()
    {
        let base = stem.clone();
        stem = (1..)
            .map(|n| format!("{base}_{n}"))
            .find(|s| {
                !out_dir.join(format!("{s}.csv")).exists()
                    && !out_dir.join(format!("{s}.json")).exists()
            })
            .expect("unbounded suffix search");
    }
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Json => {
                let path = unique_path(out_dir, &stem, "json");
                write_file(&path, &serde_json::to_string_pretty(report)?)?;
                written.push(path);
            }
            Format::Csv => {
                let mut parts = vec![
                    (stem.clone(), csv_body(report)?),
                    (format!("{stem}_normalized"), normalized_csv_body(report)?),
                ];
                if report.trials.iter().any(|t| t.record.is_some()) {
                    parts.push((format!("{stem}_traces"), traces_csv_body(report)?));
                }
                if !report.fits.is_empty() {
                    parts.push((format!("{stem}_histogram"), histogram_csv_body(report)?));
                    parts.push((format!("{stem}_fits"), fits_csv_body(report)?));
                }
                if !report.bounds.is_empty() {
                    parts.push((format!("{stem}_bounds"), bounds_csv_body(report)?));
                }
                for (name, body) in parts {
                    let path = unique_path(out_dir, &name, "csv");
                    write_file(&path, &body)?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_integrates_to_one() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        let h = histogram(&xs, 7);
        assert_eq!(h.len(), 7);
        let mass: f64 = h.iter().map(|(l, r, d)| (r - l) * d).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(histogram(&[], 5).is_empty());
        let flat = histogram(&[2.0, 2.0], 3);
        assert!((flat.iter().map(|(l, r, d)| (r - l) * d).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
