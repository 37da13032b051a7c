//! Replicate orchestration with FDP/TPR metrics, plus aggregation into CSV reports.

pub mod metrics;
pub mod output;
pub mod runner;
pub mod summary;

pub use metrics::compute_metrics;
pub use output::{write_outputs, OutputFiles};
pub use runner::{
    parse_methods, resolve_workers, run_bayes_ms, run_method, run_replicates, run_scenario, working_response,
    BenchmarkConfig, Method, ModelConfig, ReplicateReport, WORKERS_ENV,
};
pub use summary::{summarize, BenchmarkSummary, MethodSummary, Quantiles};
