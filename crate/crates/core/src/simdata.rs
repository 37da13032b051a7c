//! Synthetic datasets for the linear, random-intercept, logistic and Poisson
//! scenarios.
//!
//! Covariates are multivariate normal with a block-diagonal covariance whose
//! blocks are linearly decaying Toeplitz matrices. The active coefficients sit
//! in the first block, so signals are correlated with each other but not with
//! the null covariates.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Largest linear predictor accepted when simulating Poisson outcomes.
pub const POISSON_ETA_BOUND: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Linear,
    RandomIntercept,
    Logistic,
    Poisson,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::RandomIntercept => "random_intercept",
            Family::Logistic => "logistic",
            Family::Poisson => "poisson",
        }
    }

    /// Whether the likelihood carries an observation noise scale.
    pub fn has_noise_scale(self) -> bool {
        matches!(self, Family::Linear | Family::RandomIntercept)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "random_intercept" => Ok(Family::RandomIntercept),
            "logistic" => Ok(Family::Logistic),
            "poisson" => Ok(Family::Poisson),
            other => Err(Error::InvalidConfig(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub block_sizes: Vec<usize>,
    pub rho: f64,
}

impl CovarianceSpec {
    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta: Vec<f64>,
    pub active_mask: Vec<bool>,
    pub beta0: f64,
    pub sigma_y: f64,
    pub sigma_b0r: f64,
}

impl GroundTruth {
    pub fn n_active(&self) -> usize {
        self.active_mask.iter().filter(|&&a| a).count()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.active_mask
            .iter()
            .enumerate()
            .filter_map(|(j, &a)| a.then_some(j))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    /// Zero-based subject id per row (repeated-measurement designs only).
    pub subject_index: Option<Vec<usize>>,
    /// One-based measurement index `l` per row (repeated-measurement designs only).
    pub measurement_index: Option<Vec<usize>>,
    pub truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: x.nrows(),
            });
        }
        Ok(Self {
            y,
            x,
            subject_index: None,
            measurement_index: None,
            truth: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    /// Number of distinct subjects; equals the row count for non-repeated designs.
    pub fn n_subjects(&self) -> usize {
        match &self.subject_index {
            Some(idx) => idx.iter().max().map_or(0, |m| m + 1),
            None => self.n_rows(),
        }
    }

    /// Checks row alignment and, for repeated designs, that every subject has
    /// the same number of measurements.
    pub fn validate(&self) -> Result<()> {
        if self.x.nrows() != self.y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.y.len(),
                got: self.x.nrows(),
            });
        }
        if let Some(subjects) = &self.subject_index {
            if subjects.len() != self.y.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.y.len(),
                    got: subjects.len(),
                });
            }
            let mut counts = vec![0usize; self.n_subjects()];
            for &s in subjects {
                counts[s] += 1;
            }
            if counts.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::InvalidConfig(
                    "subjects have unequal numbers of measurements".into(),
                ));
            }
        }
        Ok(())
    }

    /// Copy with every covariate column centred and scaled to unit variance.
    /// Constant columns are centred only. Column order is preserved, so
    /// selections on the standardized copy index the original covariates.
    pub fn standardized(&self) -> Dataset {
        let n = self.n_rows();
        let mut x = self.x.clone();
        if n > 1 {
            for mut col in x.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
                let var = col.norm_squared() / n as f64;
                if var > 0.0 {
                    col /= var.sqrt();
                }
            }
        }
        Dataset {
            x,
            ..self.clone()
        }
    }

    /// Rows selected by `rows`, in that order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Dataset {
            y,
            x,
            subject_index: self
                .subject_index
                .as_ref()
                .map(|s| rows.iter().map(|&i| s[i]).collect()),
            measurement_index: self
                .measurement_index
                .as_ref()
                .map(|m| rows.iter().map(|&i| m[i]).collect()),
            truth: self.truth.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub p1: usize,
    pub rho: f64,
    #[serde(rename = "coefficients")]
    pub coefficient_pool: Vec<f64>,
    #[serde(default = "default_unit")]
    pub sigma_y: f64,
    #[serde(rename = "sigma_b0R", default = "default_sigma_b0r")]
    pub sigma_b0r: f64,
    #[serde(rename = "M", default = "default_one")]
    pub m: usize,
    #[serde(default)]
    pub beta0: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_unit() -> f64 {
    1.0
}

fn default_sigma_b0r() -> f64 {
    2.0
}

fn default_one() -> usize {
    1
}

impl ScenarioConfig {
    /// Linear scenario with `rho = 0.5` and coefficients drawn from `{±1, ±2}`.
    pub fn linear(n: usize, p: usize, p1: usize) -> Self {
        Self {
            family: Family::Linear,
            n,
            p,
            p1,
            rho: 0.5,
            coefficient_pool: vec![-2.0, -1.0, 1.0, 2.0],
            sigma_y: 1.0,
            sigma_b0r: 2.0,
            m: 1,
            beta0: 0.0,
            seed: 0,
        }
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.p1 > self.p {
            return bad("p1 must not exceed p");
        }
        if self.m == 0 {
            return bad("M must be at least 1");
        }
        if self.m > 1 && self.family != Family::RandomIntercept {
            return bad("repeated measurements require the random_intercept family");
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1)");
        }
        if self.family.has_noise_scale() && self.sigma_y <= 0.0 {
            return bad("sigma_y must be positive");
        }
        if self.family == Family::RandomIntercept && self.sigma_b0r <= 0.0 {
            return bad("sigma_b0R must be positive");
        }
        Ok(())
    }

    /// Covariance blocks `{p1, p - p1}` with empty blocks dropped.
    pub fn covariance_spec(&self) -> CovarianceSpec {
        let block_sizes = [self.p1, self.p - self.p1]
            .into_iter()
            .filter(|&b| b > 0)
            .collect();
        CovarianceSpec {
            block_sizes,
            rho: self.rho,
        }
    }
}

/// Block-diagonal covariance with linearly decaying Toeplitz blocks.
///
/// Within a block of size `b`, entry `(u, v)` is
/// `(b - 1 - |u - v|) * rho / (b - 1)` off the diagonal and 1 on it.
pub fn build_block_toeplitz(spec: &CovarianceSpec) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&spec.rho) {
        return Err(Error::InvalidConfig("rho must lie in [0, 1)".into()));
    }
    if spec.block_sizes.iter().any(|&b| b == 0) {
        return Err(Error::InvalidConfig("block sizes must be positive".into()));
    }
    let p = spec.dimension();
    let mut sigma = DMatrix::zeros(p, p);
    let mut offset = 0;
    for &b in &spec.block_sizes {
        for u in 0..b {
            sigma[(offset + u, offset + u)] = 1.0;
            for v in (u + 1)..b {
                let d = v - u;
                let value = (b - 1 - d) as f64 * spec.rho / (b - 1) as f64;
                sigma[(offset + u, offset + v)] = value;
                sigma[(offset + v, offset + u)] = value;
            }
        }
        offset += b;
    }
    if p > 0 && Cholesky::new(sigma.clone()).is_none() {
        return Err(Error::NotPositiveDefinite(
            "block Toeplitz construction".into(),
        ));
    }
    Ok(sigma)
}

/// Smallest diagonal entry of the Cholesky factor, or `None` if the
/// factorization fails.
pub fn min_cholesky_pivot(sigma: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(sigma.clone())?;
    let l = chol.l();
    l.diagonal().iter().copied().reduce(f64::min)
}

/// `n` independent rows from `N(0, sigma)`, generated as `Z Lᵀ` with
/// `L Lᵀ = sigma`.
pub fn sample_mvn(n: usize, sigma: &DMatrix<f64>, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = stream_rng(seed, Stream::Covariates);
    sample_mvn_with(n, sigma, &mut rng)
}

pub(crate) fn sample_mvn_with<R: Rng + ?Sized>(
    n: usize,
    sigma: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let p = sigma.ncols();
    if sigma.nrows() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: sigma.nrows(),
        });
    }
    if p == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let l = Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("covariance for sampling".into()))?
        .unpack();
    // Row-major fill so the stream order does not depend on storage layout.
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(z * l.transpose())
}

pub fn gen_ground_truth(config: &ScenarioConfig, seed: u64) -> Result<GroundTruth> {
    if config.p1 > config.p {
        return Err(Error::InvalidConfig("p1 must not exceed p".into()));
    }
    if config.p1 > 0 && config.coefficient_pool.is_empty() {
        return Err(Error::InvalidConfig("coefficient pool is empty".into()));
    }
    if config.coefficient_pool.iter().any(|&c| c == 0.0) {
        return Err(Error::InvalidConfig(
            "coefficient pool must exclude zero".into(),
        ));
    }
    let mut rng = stream_rng(seed, Stream::Coefficients);
    let mut beta = vec![0.0; config.p];
    for b in beta.iter_mut().take(config.p1) {
        *b = *config
            .coefficient_pool
            .choose(&mut rng)
            .expect("pool is non-empty");
    }
    let active_mask = beta.iter().map(|&b| b != 0.0).collect();
    Ok(GroundTruth {
        beta,
        active_mask,
        beta0: config.beta0,
        sigma_y: config.sigma_y,
        sigma_b0r: config.sigma_b0r,
    })
}

pub fn simulate(config: &ScenarioConfig) -> Result<Dataset> {
    config.validate()?;
    let sigma = build_block_toeplitz(&config.covariance_spec())?;
    simulate_with_covariance(config, &sigma)
}

/// Same as [`simulate`] with a precomputed covariance, which replicate loops
/// reuse across seeds.
pub fn simulate_with_covariance(config: &ScenarioConfig, sigma: &DMatrix<f64>) -> Result<Dataset> {
    config.validate()?;
    let seed = config.seed;
    let truth = gen_ground_truth(config, seed)?;
    let rows = config.n * config.m;
    let x = sample_mvn(rows, sigma, seed)?;
    let beta = DVector::from_column_slice(&truth.beta);
    let eta: DVector<f64> = (&x * &beta).add_scalar(truth.beta0);

    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let (y, subject_index, measurement_index) = match config.family {
        Family::Linear => {
            let noise = Normal::new(0.0, config.sigma_y)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let y = eta.map(|e| e + noise.sample(&mut noise_rng));
            (y, None, None)
        }
        Family::RandomIntercept => {
            let noise = Normal::new(0.0, config.sigma_y)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let ri = Normal::new(0.0, config.sigma_b0r)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let mut ri_rng = stream_rng(seed, Stream::RandomIntercepts);
            let intercepts: Vec<f64> = (0..config.n).map(|_| ri.sample(&mut ri_rng)).collect();
            let subjects: Vec<usize> = (0..rows).map(|r| r / config.m).collect();
            let measurements: Vec<usize> = (0..rows).map(|r| r % config.m + 1).collect();
            let y = DVector::from_iterator(
                rows,
                (0..rows).map(|r| eta[r] + intercepts[subjects[r]] + noise.sample(&mut noise_rng)),
            );
            (y, Some(subjects), Some(measurements))
        }
        Family::Logistic => {
            let y = eta.map(|e| {
                let prob = 1.0 / (1.0 + (-e).exp());
                if noise_rng.random::<f64>() < prob {
                    1.0
                } else {
                    0.0
                }
            });
            (y, None, None)
        }
        Family::Poisson => {
            if let Some((row, &e)) = eta
                .iter()
                .enumerate()
                .find(|(_, &e)| e > POISSON_ETA_BOUND || !e.is_finite())
            {
                return Err(Error::PoissonOverflow {
                    row,
                    eta: e,
                    bound: POISSON_ETA_BOUND,
                });
            }
            let mut y = DVector::zeros(rows);
            for (i, &e) in eta.iter().enumerate() {
                let dist = Poisson::new(e.exp())
                    .map_err(|err| Error::InvalidConfig(format!("row {i}: {err}")))?;
                y[i] = dist.sample(&mut noise_rng);
            }
            (y, None, None)
        }
    };

    Ok(Dataset {
        y,
        x,
        subject_index,
        measurement_index,
        truth: Some(truth),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(blocks: &[usize], rho: f64) -> CovarianceSpec {
        CovarianceSpec {
            block_sizes: blocks.to_vec(),
            rho,
        }
    }

    #[test]
    fn toeplitz_three_block_entries() {
        let s = build_block_toeplitz(&spec(&[3], 0.5)).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.25, 0.0, 0.25, 1.0, 0.25, 0.0, 0.25, 1.0],
        );
        assert_eq!(s, expected);
    }

    #[test]
    fn toeplitz_zero_rho_is_identity() {
        let s = build_block_toeplitz(&spec(&[4, 3], 0.0)).unwrap();
        assert_eq!(s, DMatrix::identity(7, 7));
    }

    #[test]
    fn toeplitz_block_of_two_is_identity() {
        let s = build_block_toeplitz(&spec(&[2], 0.5)).unwrap();
        assert_eq!(s, DMatrix::identity(2, 2));
    }

    #[test]
    fn toeplitz_is_block_diagonal() {
        let s = build_block_toeplitz(&spec(&[4, 5], 0.9)).unwrap();
        for u in 0..4 {
            for v in 4..9 {
                assert_eq!(s[(u, v)], 0.0);
                assert_eq!(s[(v, u)], 0.0);
            }
        }
    }

    #[test]
    fn toeplitz_full_size_configs_are_positive_definite() {
        for blocks in [[50, 950], [25, 475]] {
            let s = build_block_toeplitz(&spec(&blocks, 0.5)).unwrap();
            assert_eq!(s, s.transpose());
            assert!(min_cholesky_pivot(&s).unwrap() > 0.0);
        }
    }

    #[test]
    fn toeplitz_rejects_rho_one() {
        assert!(build_block_toeplitz(&spec(&[3], 1.0)).is_err());
    }

    #[test]
    fn mvn_identity_covariance() {
        let n = 50_000;
        let x = sample_mvn(n, &DMatrix::identity(5, 5), 3).unwrap();
        let cov = x.transpose() * &x / n as f64;
        for u in 0..5 {
            for v in 0..5 {
                let target = if u == v { 1.0 } else { 0.0 };
                assert!((cov[(u, v)] - target).abs() < 0.05, "{u},{v}: {}", cov[(u, v)]);
            }
        }
    }

    #[test]
    fn mvn_empty_and_deterministic() {
        let sigma = build_block_toeplitz(&spec(&[3, 2], 0.5)).unwrap();
        let empty = sample_mvn(0, &sigma, 1).unwrap();
        assert_eq!(empty.shape(), (0, 5));
        assert_eq!(sample_mvn(20, &sigma, 9).unwrap(), sample_mvn(20, &sigma, 9).unwrap());
    }

    #[test]
    fn mvn_rejects_non_pd() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sample_mvn(3, &bad, 0), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn ground_truth_forced_placement() {
        let mut cfg = ScenarioConfig::linear(10, 4, 2);
        cfg.coefficient_pool = vec![1.0];
        let t = gen_ground_truth(&cfg, 0).unwrap();
        assert_eq!(t.beta, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(t.active_mask, vec![true, true, false, false]);
    }

    #[test]
    fn ground_truth_null_model() {
        let cfg = ScenarioConfig::linear(10, 6, 0);
        let t = gen_ground_truth(&cfg, 0).unwrap();
        assert!(t.beta.iter().all(|&b| b == 0.0));
        assert_eq!(t.n_active(), 0);
    }

    #[test]
    fn ground_truth_full_size() {
        let cfg = ScenarioConfig::linear(300, 1000, 50);
        let t = gen_ground_truth(&cfg, 5).unwrap();
        assert_eq!(t.n_active(), 50);
        assert!(t.beta[..50].iter().all(|b| [-2.0, -1.0, 1.0, 2.0].contains(b)));
    }

    #[test]
    fn ground_truth_errors() {
        let mut cfg = ScenarioConfig::linear(10, 4, 2);
        cfg.coefficient_pool.clear();
        assert!(gen_ground_truth(&cfg, 0).is_err());
        cfg.coefficient_pool = vec![0.0, 1.0];
        assert!(gen_ground_truth(&cfg, 0).is_err());
    }

    #[test]
    fn linear_degenerate_noise() {
        let mut cfg = ScenarioConfig::linear(50, 4, 0);
        cfg.sigma_y = 1e-12;
        cfg.beta0 = 2.5;
        let d = simulate(&cfg).unwrap();
        assert!(d.y.iter().all(|&y| (y - 2.5).abs() < 1e-6));
    }

    #[test]
    fn logistic_null_mean() {
        let cfg = ScenarioConfig::linear(50_000, 2, 0).with_family(Family::Logistic);
        let d = simulate(&cfg).unwrap();
        let mean = d.y.mean();
        assert!(mean > 0.49 && mean < 0.51, "{mean}");
        assert!(d.y.iter().all(|&y| y == 0.0 || y == 1.0));
    }

    #[test]
    fn poisson_full_size_counts() {
        let mut cfg = ScenarioConfig::linear(500, 1000, 50).with_family(Family::Poisson);
        cfg.coefficient_pool = vec![-1.0, 1.0];
        cfg.beta0 = 5.0;
        // Seeds whose linear predictor stays under the bound produce counts;
        // the rest must report the offending row.
        let mut produced = 0;
        for seed in 0..5 {
            match simulate(&cfg.clone().with_seed(seed)) {
                Ok(d) => {
                    produced += 1;
                    assert!(d.y.iter().all(|&y| y >= 0.0 && y.fract() == 0.0));
                }
                Err(Error::PoissonOverflow { eta, .. }) => assert!(eta > POISSON_ETA_BOUND),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(produced > 0);
    }

    #[test]
    fn poisson_overflow_reports_row() {
        let mut cfg = ScenarioConfig::linear(5, 2, 0).with_family(Family::Poisson);
        cfg.beta0 = 31.0;
        match simulate(&cfg) {
            Err(Error::PoissonOverflow { row, .. }) => assert_eq!(row, 0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn linear_residual_variance() {
        let mut cfg = ScenarioConfig::linear(50_000, 5, 2);
        cfg.sigma_y = 1.7;
        let d = simulate(&cfg).unwrap();
        let t = d.truth.as_ref().unwrap();
        let fitted = &d.x * DVector::from_column_slice(&t.beta);
        let resid = &d.y - fitted;
        let var = resid.norm_squared() / resid.len() as f64;
        assert!((var / (1.7 * 1.7) - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn random_intercept_layout() {
        let mut cfg = ScenarioConfig::linear(7, 5, 2).with_family(Family::RandomIntercept);
        cfg.m = 3;
        let d = simulate(&cfg).unwrap();
        assert_eq!(d.n_rows(), 21);
        assert_eq!(d.n_subjects(), 7);
        assert_eq!(d.measurement_index.as_ref().unwrap()[..3], [1, 2, 3]);
        d.validate().unwrap();
    }

    #[test]
    fn replay_is_bitwise() {
        for family in [Family::Linear, Family::Logistic, Family::Poisson] {
            let cfg = ScenarioConfig::linear(40, 12, 3).with_family(family).with_seed(77);
            assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        }
    }

    #[test]
    fn standardized_columns() {
        let cfg = ScenarioConfig::linear(100, 6, 2).with_seed(4);
        let d = simulate(&cfg).unwrap().standardized();
        for col in d.x.column_iter() {
            assert!(col.mean().abs() < 1e-12);
            assert!((col.norm_squared() / 100.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scenario_json_keys() {
        let json = r#"{"family":"random_intercept","n":100,"p":200,"p1":10,"rho":0.5,
            "coefficients":[-2,-1,1,2],"sigma_y":1,"sigma_b0R":2,"M":5,"beta0":0}"#;
        let cfg: ScenarioConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.m, 5);
        assert_eq!(cfg.family, Family::RandomIntercept);
        assert_eq!(cfg.sigma_b0r, 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn active_count_matches_p1(p in 1usize..30, frac in 0.0f64..1.0, seed in 0u64..1000) {
                let p1 = (p as f64 * frac) as usize;
                let cfg = ScenarioConfig::linear(8, p, p1).with_seed(seed);
                let d = simulate(&cfg).unwrap();
                let truth = d.truth.unwrap();
                prop_assert_eq!(truth.n_active(), p1);
                for (b, a) in truth.beta.iter().zip(&truth.active_mask) {
                    prop_assert_eq!(*b != 0.0, *a);
                }
            }
        }
    }
}
