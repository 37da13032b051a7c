use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::harness::runner::ReplicateReport;
use crate::harness::summary::BenchmarkSummary;

#[derive(Serialize)]
struct SummaryRow<'a> {
    scenario: &'a str,
    method: &'a str,
    replicates: usize,
    failures: usize,
    fdp_mean: f64,
    fdp_median: f64,
    fdp_q10: f64,
    fdp_q90: f64,
    tpr_mean: f64,
    tpr_median: f64,
    tpr_q10: f64,
    tpr_q90: f64,
    n_selected_mean: f64,
    runtime_s_mean: f64,
}

#[derive(Serialize)]
struct PlotRow<'a> {
    scenario: &'a str,
    method: &'a str,
    replicate: usize,
    metric: &'a str,
    value: f64,
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub reports: PathBuf,
    pub summary: PathBuf,
    pub plot_fdr: PathBuf,
    pub plot_tpr: PathBuf,
}

pub fn write_reports(path: &Path, reports: &[ReplicateReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports(path: &Path) -> Result<Vec<ReplicateReport>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_summary(path: &Path, summary: &BenchmarkSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for g in &summary.groups {
        w.serialize(SummaryRow {
            scenario: &g.scenario,
            method: g.method.as_str(),
            replicates: g.replicates,
            failures: g.failures,
            fdp_mean: g.fdp.mean,
            fdp_median: g.fdp.median,
            fdp_q10: g.fdp.q10,
            fdp_q90: g.fdp.q90,
            tpr_mean: g.tpr.mean,
            tpr_median: g.tpr.median,
            tpr_q10: g.tpr.q10,
            tpr_q90: g.tpr.q90,
            n_selected_mean: g.mean_n_selected,
            runtime_s_mean: g.mean_runtime_s,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format plot data, one row per successful report.
pub fn write_plotdata(
    path: &Path,
    reports: &[ReplicateReport],
    metric: &str,
    value: fn(&ReplicateReport) -> f64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports.iter().filter(|r| r.is_ok()) {
        w.serialize(PlotRow {
            scenario: &r.scenario,
            method: r.method.as_str(),
            replicate: r.replicate,
            metric,
            value: value(r),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `reports.csv`, `summary.csv`, `plotdata_fdr.csv` and
/// `plotdata_tpr.csv` into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    reports: &[ReplicateReport],
    summary: &BenchmarkSummary,
) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let files = OutputFiles {
        reports: dir.join("reports.csv"),
        summary: dir.join("summary.csv"),
        plot_fdr: dir.join("plotdata_fdr.csv"),
        plot_tpr: dir.join("plotdata_tpr.csv"),
    };
    write_reports(&files.reports, reports)?;
    write_summary(&files.summary, summary)?;
    write_plotdata(&files.plot_fdr, reports, "fdr", |r| r.fdp)?;
    write_plotdata(&files.plot_tpr, reports, "tpr", |r| r.tpr)?;
    Ok(files)
}
