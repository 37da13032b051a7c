//! Model-X Gaussian knockoffs with a known covariance and the knockoff+
//! filter on LASSO coefficient-difference statistics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::baselines::lasso::{lasso_cv, LassoProblem, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::mirror::{select_covariates, SelectionResult, Threshold};
use crate::rng::{stream_rng, Stream};
use crate::simdata::Dataset;

/// Eigenvalue floor applied to the conditional covariance of the knockoffs.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KnockoffDesign {
    pub x_tilde: DMatrix<f64>,
    /// Per-variable `s_j` on the covariance scale of `Sigma`.
    pub s: Vec<f64>,
}

/// Equicorrelated `s_j = min(2 λ_min(Σ_corr), 1)` on the correlation scale,
/// returned on the scale of `sigma`.
pub fn equicorrelated_s(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = sigma.ncols();
    let sd: Vec<f64> = (0..p).map(|j| sigma[(j, j)].sqrt()).collect();
    if sd.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite("non-positive variance".into()));
    }
    let corr = DMatrix::from_fn(p, p, |u, v| sigma[(u, v)] / (sd[u] * sd[v]));
    let eig = SymmetricEigen::new(corr);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite("knockoff covariance".into()));
    }
    let s = (2.0 * lmin).min(1.0);
    Ok(sd.iter().map(|v| s * v * v).collect())
}

/// Knockoff sampler for a fixed covariance: `X̃ = X A + Z Cᵀ` with
/// `A = I − Σ⁻¹ D` and `C Cᵀ = 2D − D Σ⁻¹ D`.
#[derive(Debug, Clone)]
pub struct KnockoffSampler {
    mean_map: DMatrix<f64>,
    noise_factor: DMatrix<f64>,
    s: Vec<f64>,
}

impl KnockoffSampler {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let p = sigma.ncols();
        if sigma.nrows() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sigma.nrows(),
            });
        }
        let s = equicorrelated_s(sigma)?;
        let inv = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("knockoff covariance".into()))?
            .inverse();
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&s));
        let inv_d = &inv * &d;
        let mean_map = DMatrix::identity(p, p) - &inv_d;
        let mut cond = &d * 2.0 - &d * &inv_d;
        cond = (&cond + cond.transpose()) * 0.5;
        let eig = SymmetricEigen::new(cond);
        let root = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR).sqrt());
        let noise_factor = &eig.eigenvectors * DMatrix::from_diagonal(&root);
        Ok(Self {
            mean_map,
            noise_factor,
            s,
        })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn sample(&self, x: &DMatrix<f64>, seed: u64) -> Result<KnockoffDesign> {
        let p = self.s.len();
        if x.ncols() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: x.ncols(),
            });
        }
        let mut rng = stream_rng(seed, Stream::Knockoff);
        let n = x.nrows();
        let mut z = DMatrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                z[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let x_tilde = x * &self.mean_map + z * self.noise_factor.transpose();
        Ok(KnockoffDesign {
            x_tilde,
            s: self.s.clone(),
        })
    }
}

pub fn gaussian_knockoffs(x: &DMatrix<f64>, sigma: &DMatrix<f64>, seed: u64) -> Result<KnockoffDesign> {
    KnockoffSampler::new(sigma)?.sample(x, seed)
}

/// Knockoff(+) threshold: the smallest `t ∈ {|W_j| : W_j ≠ 0}` with
/// `(offset + #{W_j ≤ −t}) / max(#{W_j ≥ t}, 1) ≤ alpha`, with the estimate
/// at that `t`. `offset` is 1 for knockoff+ and 0 for the plain filter.
pub fn knockoff_threshold(w: &[f64], alpha: f64, offset: f64) -> Option<(f64, f64)> {
    let mut mags: Vec<f64> = w.iter().filter(|&&v| v != 0.0).map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut pos: Vec<f64> = w.iter().copied().filter(|&v| v > 0.0).collect();
    let mut neg: Vec<f64> = w.iter().filter(|&&v| v < 0.0).map(|v| -v).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    mags.into_iter().find_map(|t| {
        let at_least = (pos.len() - pos.partition_point(|&v| v < t)) as f64;
        let at_most_neg = (neg.len() - neg.partition_point(|&v| v < t)) as f64;
        let est = (offset + at_most_neg) / at_least.max(1.0);
        (est <= alpha).then_some((t, est))
    })
}

/// `W_j = |β̂_j| − |β̂_{j+p}|` from a LASSO fit on `[X, X̃]`.
pub fn lasso_difference_statistics(
    x: &DMatrix<f64>,
    x_tilde: &DMatrix<f64>,
    y: &DVector<f64>,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = x.ncols();
    let n = x.nrows();
    let mut aug = DMatrix::zeros(n, 2 * p);
    aug.columns_mut(0, p).copy_from(x);
    aug.columns_mut(p, p).copy_from(x_tilde);
    let aug = standardize_columns(aug);
    let lambda = lasso_cv(&aug, y, 50, 5, seed)?;
    let fit = LassoProblem::new(&aug, y)?.solve(lambda, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)?;
    Ok((0..p)
        .map(|j| fit.coefficients[j].abs() - fit.coefficients[j + p].abs())
        .collect())
}

fn standardize_columns(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
        let sd = (col.norm_squared() / n).sqrt();
        if sd > 0.0 {
            col /= sd;
        }
    }
    x
}

/// Selection result from knockoff statistics and the knockoff+ threshold.
pub fn knockoff_result(w: &[f64], alpha: f64) -> SelectionResult {
    match knockoff_threshold(w, alpha, 1.0) {
        Some((t, est)) => {
            let pi: Vec<f64> = w.iter().map(|&v| if v >= t { 1.0 } else { 0.0 }).collect();
            let (tau_alpha, selected, fdp_tau) = select_covariates(&pi, alpha);
            SelectionResult {
                t_alpha: Threshold::Value(t),
                inclusion_probs: pi,
                tau_alpha,
                selected,
                alpha,
                estimated_fdp_at_t: Some(est),
                estimated_fdp_at_tau: fdp_tau,
            }
        }
        None => SelectionResult {
            t_alpha: Threshold::NoThreshold,
            inclusion_probs: vec![0.0; w.len()],
            tau_alpha: Threshold::NoThreshold,
            selected: Vec::new(),
            alpha,
            estimated_fdp_at_t: None,
            estimated_fdp_at_tau: None,
        },
    }
}

/// Knockoff filter with a known covariance. The LASSO statistic is a
/// least-squares fit of `dataset.y`, so any outcome transform (for example
/// `ln(1 + y)` for counts) is applied by the caller.
pub fn knockoff_select(
    dataset: &Dataset,
    sigma: &DMatrix<f64>,
    alpha: f64,
    seed: u64,
) -> Result<SelectionResult> {
    crate::mirror::check_alpha(alpha)?;
    let design = gaussian_knockoffs(&dataset.x, sigma, seed)?;
    let w = lasso_difference_statistics(&dataset.x, &design.x_tilde, &dataset.y, seed)?;
    Ok(knockoff_result(&w, alpha))
}
