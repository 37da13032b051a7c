//! L1-penalized least squares by cyclic coordinate descent, with K-fold
//! cross-validation over a log-spaced penalty grid.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

impl LassoFit {
    pub fn support(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| (b != 0.0).then_some(j))
            .collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        (x * DVector::from_column_slice(&self.coefficients)).add_scalar(self.intercept)
    }
}

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Centred copy of a regression problem, reused across penalties.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    x_means: DVector<f64>,
    y_mean: f64,
    /// `‖x_j‖² / n` of the centred columns.
    col_scale: Vec<f64>,
}

impl LassoProblem {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: x.nrows(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                term: "lasso input".into(),
            });
        }
        let n = x.nrows().max(1) as f64;
        let x_means = x.row_mean().transpose();
        let mut xc = x.clone();
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            col.add_scalar_mut(-x_means[j]);
        }
        let y_mean = y.mean();
        let yc = y.add_scalar(-y_mean);
        let col_scale = xc.column_iter().map(|c| c.norm_squared() / n).collect();
        Ok(Self {
            x: xc,
            y: yc,
            x_means,
            y_mean,
            col_scale,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Smallest penalty with an all-zero solution, `max_j |x_jᵀ y| / n`.
    pub fn lambda_max(&self) -> f64 {
        let n = self.n() as f64;
        self.x
            .tr_mul(&self.y)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs() / n))
    }

    /// Coordinate descent from `beta` (warm start), updated in place.
    pub fn solve_from(
        &self,
        lambda: f64,
        beta: &mut [f64],
        tol: f64,
        max_sweeps: usize,
    ) -> Result<LassoFit> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig("lambda must be non-negative".into()));
        }
        let n = self.n() as f64;
        let b = DVector::from_column_slice(beta);
        let mut resid = &self.y - &self.x * b;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < max_sweeps {
            sweeps += 1;
            let mut max_change: f64 = 0.0;
            for j in 0..self.p() {
                let scale = self.col_scale[j];
                if scale == 0.0 {
                    beta[j] = 0.0;
                    continue;
                }
                let col = self.x.column(j);
                let rho = col.dot(&resid) / n + scale * beta[j];
                let new = soft_threshold(rho, lambda) / scale;
                let delta = new - beta[j];
                if delta != 0.0 {
                    resid.axpy(-delta, &col, 1.0);
                    beta[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < tol {
                converged = true;
                break;
            }
        }
        let intercept = self.y_mean
            - beta
                .iter()
                .zip(self.x_means.iter())
                .map(|(b, m)| b * m)
                .sum::<f64>();
        Ok(LassoFit {
            coefficients: beta.to_vec(),
            intercept,
            lambda,
            iterations_used: sweeps,
            converged,
        })
    }

    pub fn solve(&self, lambda: f64, tol: f64, max_sweeps: usize) -> Result<LassoFit> {
        let mut beta = vec![0.0; self.p()];
        self.solve_from(lambda, &mut beta, tol, max_sweeps)
    }

    /// `(1/n) x_jᵀ r` for every column at a fitted solution.
    pub fn correlations(&self, fit: &LassoFit) -> Vec<f64> {
        let n = self.n() as f64;
        let r = &self.y - &self.x * DVector::from_column_slice(&fit.coefficients);
        self.x.tr_mul(&r).iter().map(|v| v / n).collect()
    }

    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let r = &self.y - &self.x * DVector::from_column_slice(beta);
        r.norm_squared() / (2.0 * self.n() as f64) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

/// Minimizes `(1/2n)‖y − β₀ − Xβ‖² + λ‖β‖₁`.
pub fn lasso_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<LassoFit> {
    LassoProblem::new(x, y)?.solve(lambda, tol, max_sweeps)
}

/// `grid_size` penalties from `lambda_max` down four decades, descending.
pub fn lambda_grid(lambda_max: f64, grid_size: usize) -> Vec<f64> {
    if grid_size <= 1 {
        return vec![lambda_max];
    }
    (0..grid_size)
        .map(|k| lambda_max * 10f64.powf(-4.0 * k as f64 / (grid_size - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    pub mean_errors: Vec<f64>,
    /// Standard error of the mean held-out error across folds.
    pub std_errors: Vec<f64>,
    pub best_index: usize,
}

impl CvCurve {
    pub fn best_lambda(&self) -> f64 {
        self.lambdas[self.best_index]
    }

    /// Largest penalty whose mean error is within one standard error of the minimum.
    pub fn one_se_lambda(&self) -> f64 {
        let bound = self.mean_errors[self.best_index] + self.std_errors[self.best_index];
        let k = self.mean_errors.iter().position(|&e| e <= bound).unwrap_or(self.best_index);
        self.lambdas[k]
    }
}

/// Fold id per row: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Folds));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

pub fn lasso_cv_curve(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    grid_size: usize,
    folds: usize,
    seed: u64,
) -> Result<CvCurve> {
    if folds < 2 || folds > x.nrows() {
        return Err(Error::InvalidConfig(format!(
            "folds must lie in [2, n], got {folds}"
        )));
    }
    if grid_size == 0 {
        return Err(Error::InvalidConfig("grid_size must be positive".into()));
    }
    let full = LassoProblem::new(x, y)?;
    let lambdas = lambda_grid(full.lambda_max(), grid_size);
    let assignment = fold_assignment(x.nrows(), folds, seed);
    let mut fold_err = vec![vec![0.0; folds]; lambdas.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..x.nrows()).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..x.nrows()).filter(|&i| assignment[i] == f).collect();
        let xt = x.select_rows(train.iter());
        let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
        if yt.iter().all(|&v| v == yt[0]) {
            return Err(Error::DegenerateFold(f));
        }
        let xv = x.select_rows(test.iter());
        let yv = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
        let prob = LassoProblem::new(&xt, &yt)?;
        let mut beta = vec![0.0; x.ncols()];
        for (k, &lam) in lambdas.iter().enumerate() {
            let fit = prob.solve_from(lam, &mut beta, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)?;
            let mse = (&yv - fit.predict(&xv)).norm_squared() / test.len() as f64;
            fold_err[k][f] = mse;
        }
    }
    let k = folds as f64;
    let mean_errors: Vec<f64> = fold_err.iter().map(|e| e.iter().sum::<f64>() / k).collect();
    let std_errors: Vec<f64> = fold_err
        .iter()
        .zip(&mean_errors)
        .map(|(e, m)| (e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt())
        .collect();
    let best_index = mean_errors
        .iter()
        .enumerate()
        .fold(0, |best, (k, &e)| if e < mean_errors[best] { k } else { best });
    Ok(CvCurve {
        lambdas,
        mean_errors,
        std_errors,
        best_index,
    })
}

/// Penalty minimizing the mean held-out squared error.
pub fn lasso_cv(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    grid_size: usize,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    Ok(lasso_cv_curve(x, y, grid_size, folds, seed)?.best_lambda())
}

/// Ordinary least squares with intercept, via SVD of the centred design.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    if x.ncols() == 0 {
        return Ok((Vec::new(), y.mean()));
    }
    let prob = LassoProblem::new(x, y)?;
    let svd = prob.x.clone().svd(true, true);
    let beta = svd
        .solve(&prob.y, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("least squares failed: {e}")))?;
    let intercept = prob.y_mean - beta.dot(&prob.x_means);
    Ok((beta.iter().copied().collect(), intercept))
}
