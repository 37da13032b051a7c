//! Mean-field Gaussian ADVI.
//!
//! The variational family is a product of independent normals over the
//! unconstrained parameter vector, `q(u) = Π N(m_k, s_k)` with
//! `s_k = exp(ω_k)`. The ELBO is estimated with the reparameterization
//! `u = m + s ⊙ z`, `z ~ N(0, I)`; the entropy term is exact. Optimization uses
//! per-coordinate steps scaled by a decayed running average of squared
//! gradients.

use std::f64::consts::{E, PI};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{layout_for_data, LogDensity, ModelSpec, ParameterLayout};
use crate::rng::{stream_rng, Stream};
use crate::simdata::Dataset;

/// `½ ln(2πe)`, the entropy of a standard normal.
const HALF_LN_2PIE: f64 = 1.418_938_533_204_672_7;

/// Weight of the newest ELBO value in the reported moving average.
pub const ELBO_SMOOTHING: f64 = 0.05;

/// A differentiable log density over an unconstrained vector, evaluated on
/// batches of points stored as columns.
pub trait Target {
    fn dim(&self) -> usize;

    /// Values at the columns of `u`; gradients go into `grad` when present.
    fn eval(&self, u: &DMatrix<f64>, grad: Option<&mut DMatrix<f64>>) -> Result<Vec<f64>>;

    fn coordinate_name(&self, k: usize) -> String {
        format!("theta[{k}]")
    }
}

impl Target for LogDensity<'_> {
    fn dim(&self) -> usize {
        LogDensity::dim(self)
    }

    fn eval(&self, u: &DMatrix<f64>, grad: Option<&mut DMatrix<f64>>) -> Result<Vec<f64>> {
        self.eval_unconstrained(u, grad)
    }

    fn coordinate_name(&self, k: usize) -> String {
        self.layout().coordinate_name(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalPosterior {
    pub layout: ParameterLayout,
    pub locations: Vec<f64>,
    pub log_scales: Vec<f64>,
}

impl VariationalPosterior {
    pub fn new(layout: ParameterLayout, locations: Vec<f64>, log_scales: Vec<f64>) -> Result<Self> {
        for v in [&locations, &log_scales] {
            if v.len() != layout.dim {
                return Err(Error::DimensionMismatch {
                    expected: layout.dim,
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            layout,
            locations,
            log_scales,
        })
    }

    pub fn constant(layout: ParameterLayout, location: f64, log_scale: f64) -> Self {
        let dim = layout.dim;
        Self {
            layout,
            locations: vec![location; dim],
            log_scales: vec![log_scale; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.locations.len()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.log_scales.iter().map(|w| w.exp()).collect()
    }

    /// Exact entropy `Σ_k (ln s_k + ½ ln(2πe))`.
    pub fn entropy(&self) -> f64 {
        self.log_scales.iter().map(|w| w + HALF_LN_2PIE).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdviConfig {
    pub n_mc: usize,
    pub iterations: usize,
    pub step_size: f64,
    pub decay_rate: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Standard deviation of the random initial locations (0 starts at the origin).
    pub init_location_scale: f64,
    pub init_log_scale: f64,
}

impl Default for AdviConfig {
    fn default() -> Self {
        Self {
            n_mc: 4,
            iterations: 4000,
            step_size: 0.1,
            decay_rate: 0.1,
            epsilon: 1e-8,
            seed: 0,
            init_location_scale: 0.0,
            init_log_scale: -2.0,
        }
    }
}

impl AdviConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_mc == 0 {
            return bad("n_mc must be at least 1");
        }
        if !(self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return bad("decay_rate must lie in (0, 1]");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.init_location_scale < 0.0 {
            return bad("init_location_scale must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub iterations: Vec<usize>,
    /// Exponential moving average of the per-iteration ELBO estimates.
    pub elbo: Vec<f64>,
    pub posterior: VariationalPosterior,
    pub wall_time_seconds: f64,
}

impl FitTrace {
    /// Mean of the smoothed ELBO over a fractional window `[from, to)` of the trace.
    pub fn window_mean(&self, from: f64, to: f64) -> Option<f64> {
        let len = self.elbo.len();
        let a = ((len as f64) * from).floor() as usize;
        let b = (((len as f64) * to).ceil() as usize).min(len);
        (b > a).then(|| self.elbo[a..b].iter().sum::<f64>() / (b - a) as f64)
    }
}

fn standard_normals(dim: usize, count: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(dim, count);
    for s in 0..count {
        for k in 0..dim {
            z[(k, s)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    z
}

fn reparameterize(q: &VariationalPosterior, z: &DMatrix<f64>) -> DMatrix<f64> {
    let scales = q.scales();
    let mut u = z.clone();
    for s in 0..z.ncols() {
        for k in 0..q.dim() {
            u[(k, s)] = q.locations[k] + scales[k] * z[(k, s)];
        }
    }
    u
}

fn check_dims(q: &VariationalPosterior, target: &impl Target) -> Result<()> {
    if q.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: q.dim(),
        });
    }
    Ok(())
}

/// ELBO estimate and its gradient for a fixed matrix of standard normals.
/// The gradient is returned as `(∂/∂m, ∂/∂ω)`.
fn elbo_with_noise(
    q: &VariationalPosterior,
    target: &impl Target,
    z: &DMatrix<f64>,
    want_grad: bool,
) -> Result<(f64, Option<(Vec<f64>, Vec<f64>)>)> {
    let u = reparameterize(q, z);
    let n_mc = z.ncols() as f64;
    let dim = q.dim();
    let mut g = want_grad.then(|| DMatrix::zeros(dim, z.ncols()));
    let values = target.eval(&u, g.as_mut())?;
    let joint = values.iter().sum::<f64>() / n_mc;
    let elbo = joint + q.entropy();
    let grads = g.map(|g| {
        let scales = q.scales();
        let mut gm = vec![0.0; dim];
        let mut gw = vec![0.0; dim];
        for s in 0..z.ncols() {
            for k in 0..dim {
                gm[k] += g[(k, s)];
                gw[k] += g[(k, s)] * z[(k, s)];
            }
        }
        for k in 0..dim {
            gm[k] /= n_mc;
            // Entropy contributes exactly 1 per log-scale coordinate.
            gw[k] = gw[k] / n_mc * scales[k] + 1.0;
        }
        (gm, gw)
    });
    Ok((elbo, grads))
}

pub fn elbo_estimate_target(
    q: &VariationalPosterior,
    target: &impl Target,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    check_dims(q, target)?;
    let z = standard_normals(q.dim(), n_mc.max(1), &mut stream_rng(seed, Stream::Variational));
    let (elbo, _) = elbo_with_noise(q, target, &z, false)?;
    if !elbo.is_finite() {
        return Err(Error::NonFinite { term: "elbo".into() });
    }
    Ok(elbo)
}

/// Reparameterization gradient over `(locations, log_scales)`, computed with
/// the same standard normals that [`elbo_estimate_target`] draws for `seed`.
pub fn elbo_gradient_target(
    q: &VariationalPosterior,
    target: &impl Target,
    n_mc: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(q, target)?;
    let z = standard_normals(q.dim(), n_mc.max(1), &mut stream_rng(seed, Stream::Variational));
    let (_, g) = elbo_with_noise(q, target, &z, true)?;
    let (gm, gw) = g.expect("gradient requested");
    for (k, v) in gm.iter().chain(&gw).enumerate() {
        if !v.is_finite() {
            let k = k % q.dim();
            return Err(Error::NonFinite {
                term: format!("gradient of {}", target.coordinate_name(k)),
            });
        }
    }
    Ok((gm, gw))
}

pub fn elbo_estimate(
    q: &VariationalPosterior,
    model: &ModelSpec,
    data: &Dataset,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    let density = LogDensity::new(model, &q.layout, data)?;
    elbo_estimate_target(q, &density, n_mc, seed)
}

pub fn elbo_gradient(
    q: &VariationalPosterior,
    model: &ModelSpec,
    data: &Dataset,
    n_mc: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let density = LogDensity::new(model, &q.layout, data)?;
    elbo_gradient_target(q, &density, n_mc, seed)
}

/// Initial variational posterior for a config.
pub fn initial_posterior(layout: ParameterLayout, config: &AdviConfig) -> VariationalPosterior {
    let mut q = VariationalPosterior::constant(layout, 0.0, config.init_log_scale);
    if config.init_location_scale > 0.0 {
        let mut rng = stream_rng(config.seed, Stream::Posterior);
        for m in q.locations.iter_mut() {
            *m = config.init_location_scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    q
}

/// Maximizes the ELBO from `init` with the decayed adaptive gradient rule
/// `a ← ρ g² + (1 − ρ) a`, `Δ = η g / (ε + √a)`.
pub fn fit_target(
    target: &impl Target,
    init: VariationalPosterior,
    config: &AdviConfig,
) -> Result<FitTrace> {
    config.validate()?;
    check_dims(&init, target)?;
    let start = Instant::now();
    let dim = init.dim();
    let mut q = init;
    let mut rng = stream_rng(config.seed, Stream::Variational);
    let mut acc = vec![0.0; 2 * dim];
    let mut iterations = Vec::with_capacity(config.iterations);
    let mut trace = Vec::with_capacity(config.iterations);
    let mut smoothed = f64::NAN;

    for it in 0..config.iterations {
        let z = standard_normals(dim, config.n_mc, &mut rng);
        let result = elbo_with_noise(&q, target, &z, true);
        let (elbo, grads) = match result {
            Ok((e, g)) if e.is_finite() => (e, g.expect("gradient requested")),
            Ok((e, _)) => return Err(divergence(it, e, trace)),
            Err(Error::NonFinite { .. }) => return Err(divergence(it, f64::NAN, trace)),
            Err(e) => return Err(e),
        };
        let (gm, gw) = grads;
        smoothed = if smoothed.is_nan() {
            elbo
        } else {
            (1.0 - ELBO_SMOOTHING) * smoothed + ELBO_SMOOTHING * elbo
        };
        iterations.push(it);
        trace.push(smoothed);

        for (k, g) in gm.iter().chain(&gw).enumerate() {
            if !g.is_finite() {
                return Err(divergence(it, elbo, trace));
            }
            acc[k] = if it == 0 {
                g * g
            } else {
                config.decay_rate * g * g + (1.0 - config.decay_rate) * acc[k]
            };
            let step = config.step_size * g / (config.epsilon + acc[k].sqrt());
            if k < dim {
                q.locations[k] += step;
            } else {
                q.log_scales[k - dim] += step;
            }
        }
    }

    Ok(FitTrace {
        iterations,
        elbo: trace,
        posterior: q,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

fn divergence(iteration: usize, elbo: f64, trace: Vec<f64>) -> Error {
    Error::Divergence {
        iteration,
        elbo,
        trace_prefix: trace,
    }
}

/// Fits `model` to `data`. Covariates are used as given; callers that want
/// standardized columns pass [`Dataset::standardized`].
pub fn fit(model: &ModelSpec, data: &Dataset, config: &AdviConfig) -> Result<FitTrace> {
    let layout = layout_for_data(model, data)?;
    let density = LogDensity::new(model, &layout, data)?;
    let init = initial_posterior(layout.clone(), config);
    fit_target(&density, init, config)
}

/// `count` independent draws from `q` in unconstrained space (count × dim).
pub fn sample_posterior(q: &VariationalPosterior, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, Stream::Posterior);
    let scales = q.scales();
    let dim = q.dim();
    let mut out = DMatrix::zeros(count, dim);
    for s in 0..count {
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            out[(s, k)] = q.locations[k] + scales[k] * z;
        }
    }
    Ok(out)
}

/// Entropy constant `½ ln(2πe)` exposed for tests and reports.
pub fn normal_entropy_constant() -> f64 {
    0.5 * (2.0 * PI * E).ln()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::models::{ParamKind, Prior};
    use crate::simdata::{simulate, Family, ScenarioConfig};

    /// Independent standard normal prior over `dim` free coordinates.
    pub(crate) struct StdNormalPrior {
        pub dim: usize,
    }

    impl Target for StdNormalPrior {
        fn dim(&self) -> usize {
            self.dim
        }

        fn eval(&self, u: &DMatrix<f64>, grad: Option<&mut DMatrix<f64>>) -> Result<Vec<f64>> {
            let c = 0.5 * (2.0 * PI).ln();
            let vals = u
                .column_iter()
                .map(|col| col.iter().map(|x| -c - 0.5 * x * x).sum())
                .collect();
            if let Some(g) = grad {
                g.copy_from(&(-u));
            }
            Ok(vals)
        }
    }

    /// `log τ` for `τ ~ C⁺(1)`, a normalized density on the real line.
    struct LogHalfCauchy;

    impl Target for LogHalfCauchy {
        fn dim(&self) -> usize {
            1
        }

        fn eval(&self, u: &DMatrix<f64>, grad: Option<&mut DMatrix<f64>>) -> Result<Vec<f64>> {
            let vals = u
                .iter()
                .map(|&v| crate::models::half_cauchy_lpdf(v.exp(), 1.0) + v)
                .collect();
            if let Some(g) = grad {
                for (gk, &v) in g.iter_mut().zip(u.iter()) {
                    let t2 = (2.0 * v).exp();
                    *gk = 1.0 - 2.0 * t2 / (1.0 + t2);
                }
            }
            Ok(vals)
        }
    }

    pub(crate) fn free_layout(dim: usize) -> ParameterLayout {
        ParameterLayout {
            blocks: vec![crate::models::ParamBlock {
                name: ParamKind::Beta,
                len: dim,
                constraint: crate::models::Constraint::Free,
                offset: 0,
            }],
            dim,
        }
    }

    fn q1(m: f64, s: f64) -> VariationalPosterior {
        VariationalPosterior::new(free_layout(1), vec![m], vec![s.ln()]).unwrap()
    }

    fn mean_sd(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn entropy_constant() {
        assert!((normal_entropy_constant() - HALF_LN_2PIE).abs() < 1e-15);
    }

    #[test]
    fn elbo_is_zero_when_q_equals_prior() {
        let t = StdNormalPrior { dim: 1 };
        let est: Vec<f64> = (0..200).map(|s| elbo_estimate_target(&q1(0.0, 1.0), &t, 16, s).unwrap()).collect();
        let (m, sd) = mean_sd(&est);
        assert!(m.abs() < 3.0 * sd / (est.len() as f64).sqrt() + 1e-12, "{m} {sd}");
    }

    #[test]
    fn elbo_matches_negative_kl() {
        let t = StdNormalPrior { dim: 1 };
        let est: Vec<f64> = (0..200).map(|s| elbo_estimate_target(&q1(1.0, 1.0), &t, 64, s).unwrap()).collect();
        let (m, sd) = mean_sd(&est);
        assert!((m + 0.5).abs() < 3.0 * sd / (est.len() as f64).sqrt(), "{m} {sd}");
    }

    #[test]
    fn elbo_variance_scales_with_mc_count() {
        let t = StdNormalPrior { dim: 1 };
        let q = q1(1.0, 1.0);
        let var = |n_mc: usize| {
            let est: Vec<f64> = (0..100).map(|s| elbo_estimate_target(&q, &t, n_mc, 1000 + s).unwrap()).collect();
            mean_sd(&est).1.powi(2)
        };
        let ratio = var(1) / var(16);
        assert!((10.0..=22.0).contains(&ratio), "ratio {ratio}");
    }

    /// With per-draw values `v`, the estimate's MC sd is `sd(v) / √n`.
    fn high_precision_elbo(q: &VariationalPosterior, target: &impl Target, seed: u64) -> (f64, f64) {
        let n = 2048;
        let z = standard_normals(q.dim(), n, &mut stream_rng(seed, Stream::Variational));
        let u = reparameterize(q, &z);
        let v: Vec<f64> = target.eval(&u, None).unwrap().iter().map(|x| x + q.entropy()).collect();
        let (m, sd) = mean_sd(&v);
        (m, sd / (n as f64).sqrt())
    }

    #[test]
    fn elbo_never_exceeds_zero_for_normalized_targets() {
        let mut rng = stream_rng(77, Stream::Variational);
        for i in 0..100u64 {
            let dim = 1 + (i % 3) as usize;
            let locs: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let scales: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..1.5)).collect();
            let q = VariationalPosterior::new(free_layout(dim), locs, scales).unwrap();
            let (e, mc) = high_precision_elbo(&q, &StdNormalPrior { dim }, i);
            assert!(e <= 3.0 * mc, "normal {i}: {e} > 3 x {mc}");
            let q1 = VariationalPosterior::new(free_layout(1), vec![q.locations[0]], vec![q.log_scales[0]]).unwrap();
            let (e, mc) = high_precision_elbo(&q1, &LogHalfCauchy, i);
            assert!(e <= 3.0 * mc, "half-Cauchy {i}: {e} > 3 x {mc}");
        }
    }

    #[test]
    fn entropy_is_exact() {
        let t = StdNormalPrior { dim: 3 };
        let q = VariationalPosterior::new(free_layout(3), vec![0.2, -1.0, 3.0], vec![-0.5, 0.1, 0.7]).unwrap();
        for seed in 0..5 {
            let z = standard_normals(3, 4, &mut stream_rng(seed, Stream::Variational));
            let u = reparameterize(&q, &z);
            let joint: f64 = t.eval(&u, None).unwrap().iter().sum::<f64>() / 4.0;
            let elbo = elbo_estimate_target(&q, &t, 4, seed).unwrap();
            assert!((elbo - joint - q.entropy()).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_kl_location() {
        let t = StdNormalPrior { dim: 1 };
        let (gm, gw) = elbo_gradient_target(&q1(1.0, 1.0), &t, 200_000, 3).unwrap();
        assert!((gm[0] + 1.0).abs() < 0.01, "{}", gm[0]);
        // ∂/∂ω of −KL at s = 1 is 1 − s² = 0.
        assert!(gw[0].abs() < 0.02, "{}", gw[0]);
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let t = StdNormalPrior { dim: 4 };
        let q = VariationalPosterior::constant(free_layout(4), 0.0, 0.0);
        let (gm, gw) = elbo_gradient_target(&q, &t, 64, 8).unwrap();
        // At q = prior, ∂/∂m = −mean(z) and ∂/∂ω = 1 − mean(z²): MC-sd 1/8 and √2/8.
        for k in 0..4 {
            assert!(gm[k].abs() < 3.0 / 8.0);
            assert!(gw[k].abs() < 3.0 * 2f64.sqrt() / 8.0);
        }
    }

    pub(crate) fn max_fd_error(q: &VariationalPosterior, target: &impl Target, n_mc: usize, seed: u64) -> f64 {
        let (gm, gw) = elbo_gradient_target(q, target, n_mc, seed).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..q.dim() {
            for (which, analytic) in [(0, gm[k]), (1, gw[k])] {
                let mut up = q.clone();
                let mut dn = q.clone();
                if which == 0 {
                    up.locations[k] += h;
                    dn.locations[k] -= h;
                } else {
                    up.log_scales[k] += h;
                    dn.log_scales[k] -= h;
                }
                let fd = (elbo_estimate_target(&up, target, n_mc, seed).unwrap()
                    - elbo_estimate_target(&dn, target, n_mc, seed).unwrap())
                    / (2.0 * h);
                let rel = (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }

    #[test]
    fn gradient_matches_finite_differences_linear() {
        let cfg = ScenarioConfig::linear(20, 3, 2).with_seed(4);
        let data = simulate(&cfg).unwrap().standardized();
        let model = ModelSpec::new(Family::Linear, Prior::default());
        let layout = layout_for_data(&model, &data).unwrap();
        let density = LogDensity::new(&model, &layout, &data).unwrap();
        let mut q = VariationalPosterior::constant(layout.clone(), 0.1, -1.0);
        q.locations[0] = 0.7;
        assert!(max_fd_error(&q, &density, 3, 21) < 1e-4);
    }

    #[test]
    fn sample_posterior_degenerate() {
        let q = VariationalPosterior::new(free_layout(3), vec![1.0, -2.0, 0.5], vec![-40.0; 3]).unwrap();
        let d = sample_posterior(&q, 50, 1).unwrap();
        for s in 0..50 {
            for k in 0..3 {
                assert!((d[(s, k)] - q.locations[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sample_posterior_moments() {
        let q = q1(2.0, 3.0);
        let d = sample_posterior(&q, 100_000, 5).unwrap();
        let (m, sd) = mean_sd(d.as_slice());
        assert!((m - 2.0).abs() < 0.03, "{m}");
        assert!((sd - 3.0).abs() < 0.05, "{sd}");
    }

    #[test]
    fn sample_posterior_deterministic() {
        let q = q1(0.3, 0.2);
        assert_eq!(sample_posterior(&q, 10, 4).unwrap(), sample_posterior(&q, 10, 4).unwrap());
        assert!(sample_posterior(&q, 0, 4).is_err());
    }

    #[test]
    fn zero_iterations_returns_init() {
        let t = StdNormalPrior { dim: 2 };
        let cfg = AdviConfig {
            iterations: 0,
            ..Default::default()
        };
        let init = initial_posterior(free_layout(2), &cfg);
        let trace = fit_target(&t, init.clone(), &cfg).unwrap();
        assert_eq!(trace.posterior, init);
        assert!(trace.elbo.is_empty());
    }

    #[test]
    fn fit_is_deterministic_and_improves() {
        let cfg = ScenarioConfig::linear(60, 8, 3).with_seed(2);
        let data = simulate(&cfg).unwrap().standardized();
        let model = ModelSpec::new(Family::Linear, Prior::default());
        let advi = AdviConfig {
            iterations: 600,
            seed: 9,
            ..Default::default()
        };
        let a = fit(&model, &data, &advi).unwrap();
        let b = fit(&model, &data, &advi).unwrap();
        assert_eq!(a.posterior, b.posterior);
        assert_eq!(a.elbo, b.elbo);
        assert!(a.window_mean(0.9, 1.0).unwrap() >= a.window_mean(0.0, 0.1).unwrap());
    }

    #[test]
    fn config_validation() {
        let bad = AdviConfig {
            n_mc: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdviConfig {
            decay_rate: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let cfg: AdviConfig = serde_json::from_str(r#"{"iterations": 10}"#).unwrap();
        assert_eq!(cfg.n_mc, 4);
        assert_eq!(cfg.iterations, 10);
    }
}
