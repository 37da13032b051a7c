use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advi::{fit, AdviConfig};
use crate::baselines::{bh, ds_select, knockoff_select};
use crate::error::{Error, Result};
use crate::harness::metrics::compute_metrics;
use crate::mirror::{bayes_ms, check_alpha, SelectionResult};
use crate::models::{coefficient_draws, layout_for_data, ModelSpec, Prior};
use crate::simdata::{build_block_toeplitz, simulate_with_covariance, Dataset, Family, ScenarioConfig};

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "MIRRORFDR_WORKERS";

pub const DEFAULT_DRAWS: usize = 2000;
pub const DEFAULT_REPLICATES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "bayesms", alias = "bayes_ms")]
    BayesMs,
    #[serde(rename = "ds")]
    Ds,
    #[serde(rename = "knockoff")]
    Knockoff,
    #[serde(rename = "bh")]
    Bh,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BayesMs => "bayesms",
            Method::Ds => "ds",
            Method::Knockoff => "knockoff",
            Method::Bh => "bh",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bayesms" | "bayes_ms" => Ok(Method::BayesMs),
            "ds" => Ok(Method::Ds),
            "knockoff" => Ok(Method::Knockoff),
            "bh" => Ok(Method::Bh),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Parses a comma-separated method list such as `bayesms,ds,knockoff`.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Model settings of a benchmark; the family comes from the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub prior: Prior,
    #[serde(default = "five")]
    pub intercept_prior_scale: f64,
    #[serde(default = "one")]
    pub sigma_y_prior_scale: f64,
    #[serde(default = "three")]
    pub random_intercept_prior_scale: f64,
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn five() -> f64 {
    5.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            prior: Prior::default(),
            intercept_prior_scale: five(),
            sigma_y_prior_scale: one(),
            random_intercept_prior_scale: three(),
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, family: Family) -> ModelSpec {
        ModelSpec {
            family,
            prior: self.prior,
            intercept_prior_scale: self.intercept_prior_scale,
            sigma_y_prior_scale: self.sigma_y_prior_scale,
            random_intercept_prior_scale: self.random_intercept_prior_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Scenario id written to every report; derived from the scenario when absent.
    #[serde(default)]
    pub name: Option<String>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub advi: AdviConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Posterior coefficient draws `2N` used by BayesMS.
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_alpha() -> f64 {
    0.1
}
fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_draws() -> usize {
    DEFAULT_DRAWS
}

impl BenchmarkConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            name: None,
            scenario,
            model: ModelConfig::default(),
            advi: AdviConfig::default(),
            alpha: default_alpha(),
            replicates: default_replicates(),
            base_seed: 0,
            draws: default_draws(),
        }
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scenario_id(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let s = &self.scenario;
            format!("{}_n{}_p{}_p1{}", s.family, s.n, s.p, s.p1)
        })
    }

    pub fn model_spec(&self) -> ModelSpec {
        self.model.spec(self.scenario.family)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.model_spec().validate()?;
        self.advi.validate()?;
        check_alpha(self.alpha)?;
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.draws < 4 || self.draws % 2 != 0 {
            return Err(Error::BadDrawCount(self.draws));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub seed: u64,
    pub fdp: f64,
    pub tpr: f64,
    pub n_selected: usize,
    #[serde(rename = "runtime_s")]
    pub runtime_seconds: f64,
    pub error: Option<String>,
}

impl ReplicateReport {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Worker count: `MIRRORFDR_WORKERS` when set and valid, otherwise `requested`,
/// otherwise the number of available cores.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .or(requested.filter(|&w| w > 0))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// BayesMS on one dataset: standardize covariates, fit ADVI, draw
/// coefficients, select.
pub fn run_bayes_ms(
    data: &Dataset,
    model: &ModelSpec,
    advi: &AdviConfig,
    draws: usize,
    alpha: f64,
    seed: u64,
) -> Result<SelectionResult> {
    let data = data.standardized();
    let config = AdviConfig {
        seed,
        ..advi.clone()
    };
    let trace = fit(model, &data, &config)?;
    let layout = layout_for_data(model, &data)?;
    let beta = coefficient_draws(&trace.posterior, model, &layout, draws, seed)?;
    bayes_ms(&beta, alpha, seed)
}

/// Outcome used by the least-squares baselines: counts enter as `ln(1 + y)`.
pub fn working_response(data: &Dataset, family: Family) -> Dataset {
    match family {
        Family::Poisson => Dataset {
            y: data.y.map(f64::ln_1p),
            ..data.clone()
        },
        _ => data.clone(),
    }
}

/// Runs one method on one dataset. `sigma` is the true covariance used by the
/// knockoff baseline.
pub fn run_method(
    method: Method,
    data: &Dataset,
    sigma: &DMatrix<f64>,
    config: &BenchmarkConfig,
    seed: u64,
) -> Result<SelectionResult> {
    let family = config.scenario.family;
    match method {
        Method::BayesMs => run_bayes_ms(
            data,
            &config.model_spec(),
            &config.advi,
            config.draws,
            config.alpha,
            seed,
        ),
        Method::Ds => match family {
            Family::Linear | Family::RandomIntercept => ds_select(data, config.alpha, seed),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        },
        Method::Knockoff => knockoff_select(&working_response(data, family), sigma, config.alpha, seed),
        Method::Bh => match family {
            Family::Linear | Family::RandomIntercept => bh::bh_result(data, config.alpha),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        },
    }
}

fn report_for(
    scenario: &str,
    method: Method,
    replicate: usize,
    seed: u64,
    data: &Result<Dataset>,
    sigma: &DMatrix<f64>,
    config: &BenchmarkConfig,
) -> ReplicateReport {
    let start = Instant::now();
    let outcome = data.as_ref().map_err(|e| e.to_string()).and_then(|d| {
        let sel = run_method(method, d, sigma, config, seed).map_err(|e| e.to_string())?;
        let truth = d.truth.as_ref().ok_or("dataset has no ground truth")?;
        Ok((compute_metrics(&sel.selected, truth), sel.selected.len()))
    });
    let runtime_seconds = start.elapsed().as_secs_f64();
    let base = ReplicateReport {
        scenario: scenario.to_string(),
        method,
        replicate,
        seed,
        fdp: 0.0,
        tpr: 0.0,
        n_selected: 0,
        runtime_seconds,
        error: None,
    };
    match outcome {
        Ok(((fdp, tpr), n_selected)) => ReplicateReport {
            fdp,
            tpr,
            n_selected,
            ..base
        },
        Err(e) => ReplicateReport {
            error: Some(e),
            ..base
        },
    }
}

/// Every (replicate, method) pair yields exactly one report; replicate `r`
/// uses seed `base_seed + r` for simulation and for every method. Reports
/// are sorted by replicate, then method order in `methods`.
pub fn run_replicates(
    config: &BenchmarkConfig,
    methods: &[Method],
    workers: usize,
) -> Result<Vec<ReplicateReport>> {
    config.validate()?;
    let sigma = build_block_toeplitz(&config.scenario.covariance_spec())?;
    let scenario = config.scenario_id();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let per_replicate: Vec<Vec<ReplicateReport>> = pool.install(|| {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let seed = config.base_seed + r as u64;
                let sim = config.scenario.clone().with_seed(seed);
                let data = simulate_with_covariance(&sim, &sigma);
                methods
                    .iter()
                    .map(|&m| report_for(&scenario, m, r, seed, &data, &sigma, config))
                    .collect()
            })
            .collect()
    });
    Ok(per_replicate.into_iter().flatten().collect())
}

/// Convenience wrapper with default model and optimizer settings.
pub fn run_scenario(
    scenario: ScenarioConfig,
    methods: &[Method],
    replicates: usize,
    base_seed: u64,
    alpha: f64,
) -> Result<Vec<ReplicateReport>> {
    let config = BenchmarkConfig {
        replicates,
        base_seed,
        alpha,
        ..BenchmarkConfig::new(scenario)
    };
    run_replicates(&config, methods, resolve_workers(None))
}

/// Sample covariance of the columns of `x`, used when a dataset arrives
/// without its generating covariance.
pub fn empirical_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()));
    let mut centred = x.clone();
    for (j, mut col) in centred.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    centred.transpose() * &centred / n
}
