use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{AblationTable, GridTable, SnrCurve};
use super::EvalReport;
use crate::error::Result;

/// `Table` writes human-readable text plus CSV; `PlotData` writes only
/// machine-readable files (JSON and CSV) for plotting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Table,
    PlotData,
}

/// Pretty JSON with a trailing newline. Output is a pure function of `value`.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn matrix_csv(labels: &[String], m: &[Vec<f64>]) -> String {
    let mut s = String::from("truth");
    for l in labels {
        let _ = write!(s, ",{}", csv_field(l));
    }
    s.push('\n');
    for (l, row) in labels.iter().zip(m) {
        s.push_str(&csv_field(l));
        for v in row {
            let _ = write!(s, ",{v:.6}");
        }
        s.push('\n');
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes `report.json`, `confusion_omp.csv`, `confusion_om.csv` and, for
/// [`ReportFormat::Table`], `summary.txt`. Returns the written paths.
pub fn emit_report(report: &EvalReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let p = dir.join("report.json");
    write_json(&p, report)?;
    out.push(p);
    for (name, labels, m) in [
        ("confusion_omp.csv", &report.classes, &report.confusion_omp),
        ("confusion_om.csv", &report.om_classes, &report.confusion_om),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, matrix_csv(labels, m))?;
        out.push(p);
    }
    if format == ReportFormat::Table {
        let p = dir.join("summary.txt");
        std::fs::write(&p, summary_text(report))?;
        out.push(p);
    }
    Ok(out)
}

/// Plain-text summary of one evaluation.
pub fn summary_text(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "windows   {} s every {} s, n_fft {}", r.duration_s, r.shift_s, r.n_fft);
    let _ = writeln!(s, "decisions {}", r.decisions);
    let _ = writeln!(s, "OMP       {:.2} %", r.omp_accuracy);
    let _ = writeln!(s, "OM        {:.2} %", r.om_accuracy);
    let _ = writeln!(s);
    let width = r.classes.iter().map(|c| c.len()).max().unwrap_or(0);
    for c in &r.classes {
        if let Some(a) = r.per_class_accuracy.get(c) {
            let _ = writeln!(s, "{c:<width$}  {a:6.2}");
        }
    }
    s
}

/// `snr_curves.json` and `snr_curves.csv` (long format).
pub fn emit_snr_curves(curves: &[SnrCurve], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let j = dir.join("snr_curves.json");
    write_json(&j, curves)?;
    let mut s = String::from("curve,duration_s,n_fft,snr_db,omp_accuracy,om_accuracy,decisions\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.4},{:.4},{}",
                csv_field(&c.label),
                c.duration_s,
                c.n_fft,
                p.snr_db,
                p.omp_accuracy,
                p.om_accuracy,
                p.decisions
            );
        }
    }
    let c = dir.join("snr_curves.csv");
    std::fs::write(&c, s)?;
    Ok(vec![j, c])
}

/// `grid.json` and `grid.csv`, one row per (duration, n_fft) cell.
pub fn emit_grid(table: &GridTable, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let j = dir.join("grid.json");
    write_json(&j, table)?;
    let c = dir.join("grid.csv");
    std::fs::write(&c, grid_csv(table))?;
    Ok(vec![j, c])
}

pub fn grid_csv(table: &GridTable) -> String {
    let mut s = String::from("duration_s,n_fft,omp_mean,omp_std,om_mean,om_std,decisions,seeds\n");
    for cell in &table.cells {
        let _ = writeln!(
            s,
            "{},{},{:.4},{:.4},{:.4},{:.4},{},{}",
            cell.duration_s,
            cell.n_fft,
            cell.omp_mean,
            cell.omp_spread,
            cell.om_mean,
            cell.om_spread,
            cell.decisions,
            cell.omp_per_seed.len()
        );
    }
    s
}

/// `ablation.json` and `ablation.csv`.
pub fn emit_ablation(table: &AblationTable, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let j = dir.join("ablation.json");
    write_json(&j, table)?;
    let mut s = String::from("training,omp_accuracy,om_accuracy,best_epoch\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{:.4},{:.4},{}",
            csv_field(&r.label),
            r.report.omp_accuracy,
            r.report.om_accuracy,
            r.best_epoch
        );
    }
    let c = dir.join("ablation.csv");
    std::fs::write(&c, s)?;
    Ok(vec![j, c])
}
