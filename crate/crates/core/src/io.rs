//! File formats: CSV for datasets and covariances, JSON for posteriors and
//! selections.
//!
//! Dataset CSV has header `y,subject,measurement,x1..xp`. Subject and
//! measurement ids are one-based and left empty for designs without repeated
//! measurements. The truth sidecar has header `j,beta,active` with one-based
//! `j`. Covariance files are headerless square matrices.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::advi::{FitTrace, VariationalPosterior};
use crate::error::{Error, Result};
use crate::mirror::SelectionResult;
use crate::models::{ModelSpec, ParameterLayout};
use crate::simdata::{Dataset, GroundTruth};

pub const DATASET_FILE: &str = "dataset.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SIGMA_FILE: &str = "sigma.csv";

/// A directory resolves to its `dataset.csv`; anything else is taken as the file.
pub fn dataset_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(DATASET_FILE)
    } else {
        path.to_path_buf()
    }
}

fn parse_err(line: usize, what: &str) -> Error {
    Error::InvalidConfig(format!("dataset row {line}: bad {what}"))
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let p = data.n_covariates();
    let mut header = vec!["y".to_string(), "subject".into(), "measurement".into()];
    header.extend((1..=p).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for i in 0..data.n_rows() {
        let mut rec = Vec::with_capacity(p + 3);
        rec.push(data.y[i].to_string());
        rec.push(
            data.subject_index
                .as_ref()
                .map_or(String::new(), |s| (s[i] + 1).to_string()),
        );
        rec.push(
            data.measurement_index
                .as_ref()
                .map_or(String::new(), |m| m[i].to_string()),
        );
        rec.extend((0..p).map(|j| data.x[(i, j)].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "y" || &header[1] != "subject" || &header[2] != "measurement" {
        return Err(Error::InvalidConfig(
            "dataset header must start with y,subject,measurement".into(),
        ));
    }
    let p = header.len() - 3;
    let mut y = Vec::new();
    let mut xs = Vec::new();
    let mut subjects = Vec::new();
    let mut measurements = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize, what: &str| -> Result<f64> {
            rec[k].trim().parse::<f64>().map_err(|_| parse_err(line + 1, what))
        };
        y.push(num(0, "y")?);
        let id = |k: usize, what: &str| -> Result<Option<usize>> {
            let s = rec[k].trim();
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<usize>().map(Some).map_err(|_| parse_err(line + 1, what))
            }
        };
        subjects.push(id(1, "subject")?);
        measurements.push(id(2, "measurement")?);
        for j in 0..p {
            xs.push(num(3 + j, "covariate")?);
        }
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, p, &xs);
    let mut data = Dataset::new(DVector::from_vec(y), x)?;
    if subjects.iter().all(Option::is_some) && n > 0 {
        let s: Vec<usize> = subjects.into_iter().flatten().collect();
        if s.iter().any(|&v| v == 0) {
            return Err(Error::InvalidConfig("subject ids are one-based".into()));
        }
        data.subject_index = Some(s.into_iter().map(|v| v - 1).collect());
        data.measurement_index = Some(measurements.into_iter().map(|m| m.unwrap_or(1)).collect());
    } else if subjects.iter().any(Option::is_some) {
        return Err(Error::InvalidConfig("subject column is partially filled".into()));
    }
    data.validate()?;
    Ok(data)
}

#[derive(Serialize, Deserialize)]
struct TruthRow {
    j: usize,
    beta: f64,
    active: bool,
}

pub fn write_truth_csv(path: &Path, truth: &GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (j, (&beta, &active)) in truth.beta.iter().zip(&truth.active_mask).enumerate() {
        w.serialize(TruthRow { j: j + 1, beta, active })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the truth sidecar. Scalar nuisance values are not stored in the
/// sidecar and come back as zero.
pub fn read_truth_csv(path: &Path) -> Result<GroundTruth> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<TruthRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|row| row.j);
    Ok(GroundTruth {
        beta: rows.iter().map(|row| row.beta).collect(),
        active_mask: rows.iter().map(|row| row.active).collect(),
        beta0: 0.0,
        sigma_y: 0.0,
        sigma_b0r: 0.0,
    })
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::InvalidConfig("ragged matrix file".into()));
        }
        for v in rec.iter() {
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad matrix entry `{v}`")))?,
            );
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

/// Writes `dataset.csv`, `truth.csv` (when known) and, if given, `sigma.csv`
/// into `dir`.
pub fn write_dataset_dir(dir: &Path, data: &Dataset, sigma: Option<&DMatrix<f64>>) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_dataset_csv(&dir.join(DATASET_FILE), data)?;
    if let Some(t) = &data.truth {
        write_truth_csv(&dir.join(TRUTH_FILE), t)?;
    }
    if let Some(s) = sigma {
        write_matrix_csv(&dir.join(SIGMA_FILE), s)?;
    }
    Ok(())
}

/// Reads a dataset file or directory, attaching `truth.csv` when it sits next
/// to the dataset.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = dataset_path(path);
    let mut data = read_dataset_csv(&file)?;
    let truth = file.with_file_name(TRUTH_FILE);
    if truth.exists() {
        let t = read_truth_csv(&truth)?;
        if t.beta.len() != data.n_covariates() {
            return Err(Error::DimensionMismatch {
                expected: data.n_covariates(),
                got: t.beta.len(),
            });
        }
        data.truth = Some(t);
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorFile {
    pub model: ModelSpec,
    pub layout: ParameterLayout,
    pub locations: Vec<f64>,
    pub log_scales: Vec<f64>,
    pub elbo_trace: Vec<f64>,
}

impl PosteriorFile {
    pub fn from_trace(model: &ModelSpec, trace: &FitTrace) -> Self {
        Self {
            model: model.clone(),
            layout: trace.posterior.layout.clone(),
            locations: trace.posterior.locations.clone(),
            log_scales: trace.posterior.log_scales.clone(),
            elbo_trace: trace.elbo.clone(),
        }
    }

    pub fn posterior(&self) -> Result<VariationalPosterior> {
        VariationalPosterior::new(self.layout.clone(), self.locations.clone(), self.log_scales.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub method: String,
    #[serde(flatten)]
    pub result: SelectionResult,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
