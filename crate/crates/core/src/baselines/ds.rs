//! Mirror statistic with data splitting. LASSO on one half of the rows, at the
//! one-standard-error cross-validated penalty, picks a support that least
//! squares on the other half re-estimates; the mirror transform combines the
//! two estimates.

use nalgebra::DVector;
use rand::seq::SliceRandom;

use crate::baselines::lasso::{lasso_cv_curve, ols, LassoProblem, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::mirror::{check_alpha, mirror, select_from_mirror, MirrorSamples, SelectionResult};
use crate::rng::{stream_rng, Stream};
use crate::simdata::Dataset;

pub const MIN_ROWS: usize = 40;
/// Cross-validation folds for the support-screening LASSO on the first half.
pub const DS_FOLDS: usize = 10;

/// The two coefficient estimates and their mirror values.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEstimates {
    pub lasso_half: Vec<f64>,
    pub ols_half: Vec<f64>,
    pub mirror: Vec<f64>,
}

pub fn split_estimates(dataset: &Dataset, seed: u64) -> Result<SplitEstimates> {
    let n = dataset.n_rows();
    if n < MIN_ROWS {
        return Err(Error::InvalidConfig(format!(
            "data splitting needs at least {MIN_ROWS} rows, got {n}"
        )));
    }
    let data = dataset.standardized();
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut stream_rng(seed, Stream::Split));
    let (first, second) = rows.split_at(n / 2);
    let h1 = data.subset_rows(first);
    let h2 = data.subset_rows(second);

    let lambda = lasso_cv_curve(&h1.x, &h1.y, 50, DS_FOLDS, seed)?.one_se_lambda();
    let fit = LassoProblem::new(&h1.x, &h1.y)?.solve(lambda, DEFAULT_TOLERANCE, DEFAULT_MAX_SWEEPS)?;
    let support = fit.support();
    if support.len() + 1 >= h2.n_rows() {
        return Err(Error::RestrictedOlsInfeasible {
            support: support.len(),
            rows: h2.n_rows(),
        });
    }
    let mut ols_half = vec![0.0; data.n_covariates()];
    if !support.is_empty() {
        let xs = h2.x.select_columns(support.iter());
        let (beta, _) = ols(&xs, &DVector::from_column_slice(h2.y.as_slice()))?;
        for (k, &j) in support.iter().enumerate() {
            ols_half[j] = beta[k];
        }
    }
    let mirror = fit
        .coefficients
        .iter()
        .zip(&ols_half)
        .map(|(&a, &b)| mirror(a, b))
        .collect();
    Ok(SplitEstimates {
        lasso_half: fit.coefficients,
        ols_half,
        mirror,
    })
}

/// Data-splitting selection: one mirror value per covariate, thresholded with
/// the single-draw case of the pooled threshold search.
pub fn ds_select(dataset: &Dataset, alpha: f64, seed: u64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    let est = split_estimates(dataset, seed)?;
    let p = est.mirror.len();
    let ms = MirrorSamples::new(nalgebra::DMatrix::from_row_slice(1, p, &est.mirror))?;
    select_from_mirror(&ms, alpha)
}
