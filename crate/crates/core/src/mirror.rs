//! Bayesian mirror statistic selection.
//!
//! Posterior coefficient draws are paired into mirror samples
//! `w = |a + b| − |a − b|`. A pooled threshold `t_α` bounds the estimated
//! false discovery proportion of the mirror samples, the per-covariate
//! inclusion probabilities `π_j = P̂(w_j > t_α)` follow, and a second threshold
//! `τ_α` on the probabilities selects the final subset.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// The mirror transform `|a + b| − |a − b|`.
#[inline]
pub fn mirror(a: f64, b: f64) -> f64 {
    (a + b).abs() - (a - b).abs()
}

/// A selection threshold, or the marker that no candidate met the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ThresholdRepr", try_from = "ThresholdRepr")]
pub enum Threshold {
    Value(f64),
    NoThreshold,
}

impl Threshold {
    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::Value(v) => Some(v),
            Threshold::NoThreshold => None,
        }
    }

    pub fn is_some(self) -> bool {
        matches!(self, Threshold::Value(_))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Value(f64),
    Label(String),
}

impl From<Threshold> for ThresholdRepr {
    fn from(t: Threshold) -> Self {
        match t {
            Threshold::Value(v) => ThresholdRepr::Value(v),
            Threshold::NoThreshold => ThresholdRepr::Label("no-threshold".into()),
        }
    }
}

impl TryFrom<ThresholdRepr> for Threshold {
    type Error = String;

    fn try_from(r: ThresholdRepr) -> std::result::Result<Self, String> {
        match r {
            ThresholdRepr::Value(v) => Ok(Threshold::Value(v)),
            ThresholdRepr::Label(s) if s == "no-threshold" => Ok(Threshold::NoThreshold),
            ThresholdRepr::Label(s) => Err(format!("unknown threshold `{s}`")),
        }
    }
}

/// Monte-Carlo mirror statistic samples, one row per draw pair (N × p).
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorSamples {
    pub w: DMatrix<f64>,
}

impl MirrorSamples {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if w.nrows() == 0 {
            return Err(Error::InvalidConfig("need at least one mirror sample".into()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                term: "mirror samples".into(),
            });
        }
        Ok(Self { w })
    }

    pub fn n_pairs(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_covariates(&self) -> usize {
        self.w.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub t_alpha: Threshold,
    pub inclusion_probs: Vec<f64>,
    pub tau_alpha: Threshold,
    /// Zero-based covariate indices, ascending.
    pub selected: Vec<usize>,
    pub alpha: f64,
    pub estimated_fdp_at_t: Option<f64>,
    pub estimated_fdp_at_tau: Option<f64>,
}

/// Shuffles the rows of `beta_draws` once and applies the mirror transform to
/// aligned rows of the two halves.
pub fn mirror_samples(beta_draws: &DMatrix<f64>, seed: u64) -> Result<MirrorSamples> {
    let total = beta_draws.nrows();
    if total < 4 || total % 2 != 0 {
        return Err(Error::BadDrawCount(total));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut stream_rng(seed, Stream::MirrorShuffle));
    let n = total / 2;
    let p = beta_draws.ncols();
    let mut w = DMatrix::zeros(n, p);
    for s in 0..n {
        let (r1, r2) = (order[s], order[n + s]);
        for j in 0..p {
            w[(s, j)] = mirror(beta_draws[(r1, j)], beta_draws[(r2, j)]);
        }
    }
    MirrorSamples::new(w)
}

/// Candidate thresholds for the pooled search: half the smallest non-zero
/// `|w|`, then every distinct non-zero `|w|` ascending. The last candidate is
/// `max |w|`, which excludes every sample.
pub fn threshold_candidates(w: &[f64]) -> Vec<f64> {
    let mut mags: Vec<f64> = w.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();
    let mut out = Vec::with_capacity(mags.len() + 1);
    if let Some(&first) = mags.first() {
        out.push(first / 2.0);
    }
    out.extend(mags);
    out
}

/// Pooled estimate `Σ_j P̂(w_j < −t) / max(Σ_j P̂(w_j > t), 1)` evaluated by
/// direct counting.
pub fn pooled_fdp(ms: &MirrorSamples, t: f64) -> f64 {
    let n = ms.n_pairs() as f64;
    let neg = ms.w.iter().filter(|&&v| v < -t).count() as f64 / n;
    let pos = ms.w.iter().filter(|&&v| v > t).count() as f64 / n;
    neg / pos.max(1.0)
}

/// Smallest candidate `t > 0` whose pooled false discovery estimate is at
/// most `alpha`, with that estimate.
pub fn optimal_threshold(ms: &MirrorSamples, alpha: f64) -> (Threshold, Option<f64>) {
    let n = ms.n_pairs() as f64;
    let mut pos: Vec<f64> = ms.w.iter().copied().filter(|&v| v > 0.0).collect();
    let mut neg: Vec<f64> = ms.w.iter().filter(|&&v| v < 0.0).map(|v| -v).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let all: Vec<f64> = ms.w.iter().copied().collect();
    for t in threshold_candidates(&all) {
        // Entries strictly beyond t on each side.
        let above = (pos.len() - pos.partition_point(|&v| v <= t)) as f64 / n;
        let below = (neg.len() - neg.partition_point(|&v| v <= t)) as f64 / n;
        let fdp = below / above.max(1.0);
        if fdp <= alpha {
            return (Threshold::Value(t), Some(fdp));
        }
    }
    (Threshold::NoThreshold, None)
}

/// `π_j = (1/N) Σ_s 1(w_j⁽ˢ⁾ > t)`.
pub fn inclusion_probabilities(ms: &MirrorSamples, t_alpha: f64) -> Vec<f64> {
    let n = ms.n_pairs() as f64;
    ms.w.column_iter()
        .map(|col| col.iter().filter(|&&v| v > t_alpha).count() as f64 / n)
        .collect()
}

/// Estimated false discovery proportion `Σ (1 − π_j) / #{π_j > τ}` over the
/// covariates with `π_j > τ`; `None` when that set is empty.
pub fn probability_fdp(pi: &[f64], tau: f64) -> Option<f64> {
    let (count, miss) = pi
        .iter()
        .filter(|&&v| v > tau)
        .fold((0usize, 0.0), |(c, m), &v| (c + 1, m + (1.0 - v)));
    (count > 0).then(|| miss / count as f64)
}

/// Relative slack when comparing a summed estimate with `alpha`, so that exact
/// ties are accepted regardless of summation order.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Smallest `τ ∈ {0} ∪ {π_j}` whose estimated false discovery proportion is at
/// most `alpha` over a non-empty selection `{j : π_j > τ}`.
pub fn select_covariates(pi: &[f64], alpha: f64) -> (Threshold, Vec<usize>, Option<f64>) {
    let mut order: Vec<usize> = (0..pi.len()).collect();
    order.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]));
    let mut candidates: Vec<f64> = pi.to_vec();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Walk candidates ascending; the selected set {π > τ} is a prefix of `order`.
    let mut prefix_miss = vec![0.0; pi.len() + 1];
    for (i, &j) in order.iter().enumerate() {
        prefix_miss[i + 1] = prefix_miss[i] + (1.0 - pi[j]);
    }
    for tau in candidates {
        let count = order.partition_point(|&j| pi[j] > tau);
        if count == 0 {
            continue;
        }
        let fdp = prefix_miss[count] / count as f64;
        if fdp <= alpha * (1.0 + TIE_TOLERANCE) {
            let mut selected: Vec<usize> = order[..count].to_vec();
            selected.sort_unstable();
            return (Threshold::Value(tau), selected, Some(fdp));
        }
    }
    (Threshold::NoThreshold, Vec::new(), None)
}

/// Full selection from an already computed set of mirror samples.
pub fn select_from_mirror(ms: &MirrorSamples, alpha: f64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    let (t_alpha, fdp_t) = optimal_threshold(ms, alpha);
    let Threshold::Value(t) = t_alpha else {
        return Ok(SelectionResult {
            t_alpha,
            inclusion_probs: vec![0.0; ms.n_covariates()],
            tau_alpha: Threshold::NoThreshold,
            selected: Vec::new(),
            alpha,
            estimated_fdp_at_t: None,
            estimated_fdp_at_tau: None,
        });
    };
    let pi = inclusion_probabilities(ms, t);
    let (tau_alpha, selected, fdp_tau) = select_covariates(&pi, alpha);
    Ok(SelectionResult {
        t_alpha,
        inclusion_probs: pi,
        tau_alpha,
        selected,
        alpha,
        estimated_fdp_at_t: fdp_t,
        estimated_fdp_at_tau: fdp_tau,
    })
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// The BayesMS procedure: mirror samples, pooled threshold, inclusion
/// probabilities, then the probability threshold and final subset.
pub fn bayes_ms(beta_draws: &DMatrix<f64>, alpha: f64, seed: u64) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    let ms = mirror_samples(beta_draws, seed)?;
    select_from_mirror(&ms, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WNormalApprox {
    pub mean: f64,
    pub sd: f64,
}

/// Mean and variance of `|X|` for `X ~ N(mu, sigma²)`.
pub fn folded_normal_moments(mu: f64, sigma: f64) -> (f64, f64) {
    let phi_neg = 0.5 * erfc(mu / (sigma * std::f64::consts::SQRT_2));
    let mean = sigma * (2.0 / std::f64::consts::PI).sqrt() * (-mu * mu / (2.0 * sigma * sigma)).exp()
        + mu * (1.0 - 2.0 * phi_neg);
    let var = (mu * mu + sigma * sigma - mean * mean).max(0.0);
    (mean, var)
}

/// Normal approximation to the mirror statistic of two independent draws
/// from `N(mu, sigma²)`: the difference of the folded sum `|N(2μ, 2σ²)|` and
/// the folded difference `|N(0, 2σ²)|`, which are independent.
pub fn analytic_w_distribution(mu: f64, sigma: f64) -> Result<WNormalApprox> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig("sigma must be positive".into()));
    }
    let s = std::f64::consts::SQRT_2 * sigma;
    let (mean_a, var_a) = folded_normal_moments(2.0 * mu, s);
    let (mean_b, var_b) = folded_normal_moments(0.0, s);
    Ok(WNormalApprox {
        mean: mean_a - mean_b,
        sd: (var_a + var_b).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, Normal};

    fn ms(rows: usize, cols: usize, data: &[f64]) -> MirrorSamples {
        MirrorSamples::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn mirror_pointwise() {
        assert_eq!(mirror(2.0, 2.0), 4.0);
        assert_eq!(mirror(1.0, -1.0), -2.0);
        for b in [-3.5, 0.0, 1e-9, 7.0] {
            assert_eq!(mirror(0.0, b), 0.0);
        }
    }

    #[test]
    fn mirror_samples_requires_even_count() {
        let d = DMatrix::zeros(5, 2);
        assert!(matches!(mirror_samples(&d, 0), Err(Error::BadDrawCount(5))));
        let d = DMatrix::zeros(2, 2);
        assert!(matches!(mirror_samples(&d, 0), Err(Error::BadDrawCount(2))));
        assert_eq!(mirror_samples(&DMatrix::zeros(6, 3), 0).unwrap().n_pairs(), 3);
    }

    #[test]
    fn all_positive_samples() {
        let m = ms(100, 10, &vec![5.0; 1000]);
        let (t, fdp) = optimal_threshold(&m, 0.1);
        let t = t.value().unwrap();
        assert!(t > 0.0 && t <= 5.0);
        assert_eq!(fdp, Some(0.0));
        assert_eq!(threshold_candidates(m.w.as_slice()), vec![2.5, 5.0]);
    }

    #[test]
    fn pooled_formula_direct_evaluation() {
        // 20 draws: w1, w2 always above 1; w3 below −1 in 3 of 20 draws.
        let mut data = Vec::new();
        for s in 0..20 {
            data.extend([2.0, 3.0, if s < 3 { -1.5 } else { 0.5 }]);
        }
        let m = ms(20, 3, &data);
        assert!((pooled_fdp(&m, 1.0) - 0.075).abs() < 1e-15);
        let t = optimal_threshold(&m, 0.1).0.value().unwrap();
        assert!(t <= 1.0);
    }

    #[test]
    fn zero_samples_have_no_threshold() {
        let m = ms(2, 2, &[0.0; 4]);
        assert_eq!(optimal_threshold(&m, 0.1), (Threshold::NoThreshold, None));
    }

    #[test]
    fn inclusion_probability_counting() {
        let mut data = vec![0.0; 100];
        for (s, v) in data.iter_mut().enumerate() {
            *v = if s < 50 { 2.0 } else { 0.5 };
        }
        let m = ms(100, 1, &data);
        assert_eq!(inclusion_probabilities(&m, 1.0), vec![0.5]);
        assert_eq!(inclusion_probabilities(&m, 0.1), vec![1.0]);
        assert_eq!(inclusion_probabilities(&m, 3.0), vec![0.0]);
    }

    #[test]
    fn select_separated() {
        let (tau, sel, fdp) = select_covariates(&[1.0, 1.0, 0.0, 0.0], 0.1);
        assert_eq!(tau, Threshold::Value(0.0));
        assert_eq!(sel, vec![0, 1]);
        assert_eq!(fdp, Some(0.0));
    }

    #[test]
    fn select_boundary_point_nine() {
        let (tau, sel, fdp) = select_covariates(&[0.9, 0.9, 0.9], 0.1);
        assert_eq!(tau, Threshold::Value(0.0));
        assert_eq!(sel, vec![0, 1, 2]);
        assert!(fdp.unwrap() <= 0.1);
    }

    #[test]
    fn select_coin_flips() {
        let (tau, sel, fdp) = select_covariates(&[0.5, 0.5], 0.1);
        assert_eq!(tau, Threshold::NoThreshold);
        assert!(sel.is_empty());
        assert_eq!(fdp, None);
    }

    #[test]
    fn bayes_ms_point_masses() {
        let mut draws = DMatrix::zeros(200, 4);
        for s in 0..200 {
            draws[(s, 0)] = 4.0;
            draws[(s, 1)] = 4.0;
        }
        let r = bayes_ms(&draws, 0.1, 1).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert_eq!(r.inclusion_probs, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.estimated_fdp_at_tau, Some(0.0));
    }

    fn gaussian_draws(means: &[f64], sd: f64, count: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut d = DMatrix::zeros(count, means.len());
        for s in 0..count {
            for (j, &m) in means.iter().enumerate() {
                d[(s, j)] = Normal::new(m, sd).unwrap().sample(&mut rng);
            }
        }
        d
    }

    #[test]
    fn bayes_ms_separated_signals() {
        let mut means = vec![0.0; 200];
        means[..10].fill(5.0);
        let r = bayes_ms(&gaussian_draws(&means, 0.1, 2000, 3), 0.1, 4).unwrap();
        // At alpha = 0.1 the probability threshold may admit one null next to ten signals.
        assert!(r.selected.starts_with(&(0..10).collect::<Vec<_>>()));
        assert!(r.selected.len() <= 11, "{:?}", r.selected);
    }

    #[test]
    fn bayes_ms_pure_null_calibration() {
        let means = vec![0.0; 200];
        let mut total = 0.0;
        for rep in 0..50 {
            let r = bayes_ms(&gaussian_draws(&means, 1.0, 400, 100 + rep), 0.1, rep).unwrap();
            // Every selection is false here, so the realized FDP is 1 or 0.
            if !r.selected.is_empty() {
                total += 1.0;
            }
        }
        assert!(total / 50.0 <= 0.2, "{}", total / 50.0);
    }

    #[test]
    fn analytic_symmetric_case() {
        let a = analytic_w_distribution(0.0, 1.0).unwrap();
        assert!(a.mean.abs() < 1e-15);
        assert!((a.sd - (2.0 * (2.0 - 4.0 / std::f64::consts::PI)).sqrt()).abs() < 1e-12);
        assert!((a.sd - 1.2057).abs() < 1e-4);
        let (mb, _) = folded_normal_moments(0.0, std::f64::consts::SQRT_2);
        assert!((mb - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn analytic_strong_signal_matches_monte_carlo() {
        let a = analytic_w_distribution(3.0, 0.1).unwrap();
        assert!((a.mean - (6.0 - 0.2 / std::f64::consts::PI.sqrt())).abs() < 1e-9);
        assert!((a.mean - 5.8872).abs() < 1e-4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let nd = Normal::new(3.0, 0.1).unwrap();
        let n = 200_000;
        let mc: f64 = (0..n).map(|_| mirror(nd.sample(&mut rng), nd.sample(&mut rng))).sum::<f64>() / n as f64;
        assert!((mc - a.mean).abs() < 0.01);
    }

    #[test]
    fn analytic_rejects_bad_sigma() {
        assert!(analytic_w_distribution(0.0, 0.0).is_err());
    }

    #[test]
    fn threshold_serialization() {
        let s = serde_json::to_string(&Threshold::NoThreshold).unwrap();
        assert_eq!(s, "\"no-threshold\"");
        let t: Threshold = serde_json::from_str("0.25").unwrap();
        assert_eq!(t, Threshold::Value(0.25));
    }

    #[test]
    fn symmetric_draws_negation_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let d = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let w1 = mirror_samples(&d, 1).unwrap();
        let w2 = mirror_samples(&(-d), 2).unwrap();
        let mut a: Vec<f64> = w1.w.iter().copied().collect();
        let mut b: Vec<f64> = w2.w.iter().copied().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let ks = ks_distance(&a, &b);
        assert!(ks < 0.02, "{ks}");
    }

    fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mirror_identity(a in -1e6f64..1e6, b in -1e6f64..1e6) {
                let direct = mirror(a, b);
                let alt = 2.0 * (a * b).signum() * a.abs().min(b.abs());
                let alt = if a == 0.0 || b == 0.0 { 0.0 } else { alt };
                prop_assert!((direct - alt).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()));
            }

            #[test]
            fn selection_permutation_invariant(pi in proptest::collection::vec(0.0f64..=1.0, 1..30), seed in 0u64..100) {
                let mut perm: Vec<usize> = (0..pi.len()).collect();
                perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let permuted: Vec<f64> = perm.iter().map(|&k| pi[k]).collect();
                let (_, a, _) = select_covariates(&pi, 0.1);
                let (_, b, _) = select_covariates(&permuted, 0.1);
                let mut mapped: Vec<usize> = b.iter().map(|&k| perm[k]).collect();
                mapped.sort_unstable();
                prop_assert_eq!(a, mapped);
            }
        }
    }
}
