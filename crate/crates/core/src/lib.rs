//! Bayesian variable selection with false discovery rate control.
//!
//! The pipeline fits a sparse regression model under a continuous shrinkage
//! prior (horseshoe or product prior) with mean-field ADVI, draws coefficient
//! samples from the fitted posterior, and turns pairs of independent draws into
//! mirror-statistic samples. A pooled threshold search on those samples gives
//! per-covariate inclusion probabilities, and a second threshold on the
//! probabilities picks the final FDR-controlled subset.
//!
//! Modules:
//!
//! - [`simdata`]: block-Toeplitz covariates and the four simulation scenarios.
//! - [`models`]: parameter layouts, constraining transforms, log joint densities
//!   and their gradients.
//! - [`advi`]: reparameterization-gradient ELBO estimation with the decayed
//!   adaptive gradient optimizer.
//! - [`mirror`]: the Bayesian mirror statistic selection procedure and the
//!   folded-normal approximation of the mirror distribution.
//! - [`baselines`]: LASSO, data-splitting mirror statistic, Gaussian knockoffs
//!   and Benjamini–Hochberg.
//! - [`harness`]: replicate orchestration and reporting.
//! - [`io`]: CSV/JSON file formats shared by the command line tool.

pub mod advi;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod io;
pub mod mirror;
pub mod models;
pub mod simdata;

mod rng;

pub use advi::{AdviConfig, FitTrace, VariationalPosterior};
pub use error::{Error, Result};
pub use mirror::{bayes_ms, SelectionResult, Threshold};
pub use models::{ModelSpec, ParameterLayout, Prior};
pub use simdata::{Dataset, Family, GroundTruth, ScenarioConfig};
