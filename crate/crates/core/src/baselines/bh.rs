use nalgebra::DVector;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::baselines::lasso::ols;
use crate::error::{Error, Result};
use crate::mirror::{check_alpha, SelectionResult, Threshold};
use crate::simdata::Dataset;

/// Benjamini–Hochberg step-up rule: with sorted p-values `p₍₁₎ ≤ … ≤ p₍ₘ₎`,
/// rejects the `k` smallest where `k` is the largest index with
/// `p₍ₖ₎ ≤ k α / m`. Returns the rejected indices in ascending order.
pub fn bh_select(pvalues: &[f64], alpha: f64) -> Vec<usize> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let k = order
        .iter()
        .enumerate()
        .rev()
        .find(|(rank, &j)| pvalues[j] <= (rank + 1) as f64 * alpha / m as f64)
        .map_or(0, |(rank, _)| rank + 1);
    let mut rejected = order[..k].to_vec();
    rejected.sort_unstable();
    rejected
}

/// Two-sided t-test p-values of the OLS coefficients (with intercept).
/// Needs `n > p + 1`.
pub fn ols_pvalues(dataset: &Dataset) -> Result<Vec<f64>> {
    let (n, p) = (dataset.n_rows(), dataset.n_covariates());
    if n <= p + 1 {
        return Err(Error::RestrictedOlsInfeasible { support: p, rows: n });
    }
    let (beta, intercept) = ols(&dataset.x, &dataset.y)?;
    let fitted = &dataset.x * DVector::from_column_slice(&beta);
    let resid = &dataset.y - fitted.add_scalar(intercept);
    let df = (n - p - 1) as f64;
    let s2 = resid.norm_squared() / df;
    let mut xc = dataset.x.clone();
    for mut col in xc.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let gram_inv = (xc.transpose() * &xc)
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("design gram matrix".into()))?;
    let t_dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok((0..p)
        .map(|j| {
            let t = beta[j] / (s2 * gram_inv[(j, j)]).sqrt();
            (2.0 * t_dist.cdf(-t.abs())).min(1.0)
        })
        .collect())
}

/// BH on OLS p-values, packaged as a selection result with the p-values'
/// complements in place of inclusion probabilities.
pub fn bh_result(dataset: &Dataset, alpha: f64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    let pvalues = ols_pvalues(dataset)?;
    let selected = bh_select(&pvalues, alpha);
    Ok(SelectionResult {
        t_alpha: Threshold::NoThreshold,
        inclusion_probs: pvalues.iter().map(|q| 1.0 - q).collect(),
        tau_alpha: Threshold::NoThreshold,
        selected,
        alpha,
        estimated_fdp_at_t: None,
        estimated_fdp_at_tau: None,
    })
}
