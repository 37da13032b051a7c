use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mirrorfdr::advi::{fit, AdviConfig};
use mirrorfdr::baselines::{bh::bh_result, ds_select, knockoff_select};
use mirrorfdr::harness::{
    parse_methods, resolve_workers, run_replicates, summarize, working_response, write_outputs,
    BenchmarkConfig, WORKERS_ENV,
};
use mirrorfdr::io::{
    read_dataset, read_json, read_matrix_csv, write_dataset_dir, write_json, PosteriorFile, SelectionFile,
};
use mirrorfdr::models::coefficient_draws;
use mirrorfdr::simdata::{build_block_toeplitz, simulate_with_covariance};
use mirrorfdr::{bayes_ms, Error, Family, ModelSpec, Result, ScenarioConfig};

#[derive(Parser)]
#[command(name = "mirrorfdr", version, about = "Bayesian mirror-statistic variable selection with FDR control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset with its ground truth and covariance.
    Simulate(SimulateArgs),
    /// Fit a mean-field variational posterior.
    Fit(FitArgs),
    /// Run BayesMS selection on a fitted posterior.
    Select(SelectArgs),
    /// Run a frequentist baseline on a dataset.
    Baseline(BaselineArgs),
    /// Run replicated simulations and write reports.
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "linear")]
    family: Family,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    p: usize,
    #[arg(long, default_value_t = 50)]
    p1: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Comma-separated pool of active coefficient values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coefficients: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    sigma_y: f64,
    #[arg(long = "sigma-b0r", default_value_t = 2.0)]
    sigma_b0r: f64,
    /// Repeated measurements per subject.
    #[arg(long = "m", default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model JSON; the family is required, the rest defaults.
    #[arg(long)]
    model: PathBuf,
    /// Optimizer JSON; defaults when omitted.
    #[arg(long)]
    advi: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Ds,
    Knockoff,
    Bh,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: BaselineMethod,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// True covariance for knockoffs.
    #[arg(long)]
    sigma: Option<PathBuf>,
    /// Family of the outcome, used to pick the working response for knockoffs.
    #[arg(long, default_value = "linear")]
    family: Family,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "bayesms,ds,knockoff")]
    methods: String,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "base-seed")]
    base_seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let mut cfg = ScenarioConfig::linear(a.n, a.p, a.p1).with_family(a.family).with_seed(a.seed);
    cfg.rho = a.rho;
    if let Some(pool) = a.coefficients {
        cfg.coefficient_pool = pool;
    }
    cfg.sigma_y = a.sigma_y;
    cfg.sigma_b0r = a.sigma_b0r;
    cfg.m = a.m;
    cfg.beta0 = a.beta0;
    cfg.validate()?;
    let sigma = build_block_toeplitz(&cfg.covariance_spec())?;
    let data = simulate_with_covariance(&cfg, &sigma)?;
    write_dataset_dir(&a.out, &data, Some(&sigma))?;
    println!("wrote {} rows x {} covariates to {}", data.n_rows(), data.n_covariates(), a.out.display());
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let model: ModelSpec = read_json(&a.model)?;
    let mut advi: AdviConfig = match &a.advi {
        Some(p) => read_json(p)?,
        None => AdviConfig::default(),
    };
    if let Some(s) = a.seed {
        advi.seed = s;
    }
    let data = read_dataset(&a.data)?.standardized();
    let trace = fit(&model, &data, &advi)?;
    write_json(&a.out, &PosteriorFile::from_trace(&model, &trace))?;
    println!(
        "fitted {} parameters, final ELBO {:.3}",
        trace.posterior.dim(),
        trace.elbo.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn select_cmd(a: SelectArgs) -> Result<()> {
    let file: PosteriorFile = read_json(&a.posterior)?;
    let posterior = file.posterior()?;
    let beta = coefficient_draws(&posterior, &file.model, &file.layout, a.draws, a.seed)?;
    let result = bayes_ms(&beta, a.alpha, a.seed)?;
    report_selection(&result.selected);
    write_json(&a.out, &SelectionFile { method: "bayesms".into(), result })
}

fn baseline_cmd(a: BaselineArgs) -> Result<()> {
    let data = read_dataset(&a.data)?;
    let (name, result) = match a.method {
        BaselineMethod::Ds => ("ds", ds_select(&data, a.alpha, a.seed)?),
        BaselineMethod::Bh => ("bh", bh_result(&data, a.alpha)?),
        BaselineMethod::Knockoff => {
            let path = a
                .sigma
                .ok_or_else(|| Error::InvalidConfig("knockoff needs --sigma".into()))?;
            let sigma = read_matrix_csv(&path)?;
            let data = working_response(&data, a.family);
            ("knockoff", knockoff_select(&data, &sigma, a.alpha, a.seed)?)
        }
    };
    report_selection(&result.selected);
    write_json(&a.out, &SelectionFile { method: name.into(), result })
}

fn benchmark_cmd(a: BenchmarkArgs) -> Result<()> {
    let mut config = BenchmarkConfig::from_json_file(&a.config)?;
    if let Some(r) = a.replicates {
        config.replicates = r;
    }
    if let Some(alpha) = a.alpha {
        config.alpha = alpha;
    }
    if let Some(s) = a.base_seed {
        config.base_seed = s;
    }
    let methods = parse_methods(&a.methods)?;
    let workers = resolve_workers(a.workers);
    eprintln!(
        "{}: {} replicates, {} methods, {workers} workers",
        config.scenario_id(),
        config.replicates,
        methods.len()
    );
    let reports = run_replicates(&config, &methods, workers)?;
    let summary = summarize(&reports);
    let files = write_outputs(&a.out, &reports, &summary)?;
    println!("method     R  fail  fdp_mean  tpr_mean");
    for g in &summary.groups {
        println!(
            "{:<9} {:>2} {:>5} {:>9.3} {:>9.3}",
            g.method.as_str(),
            g.replicates,
            g.failures,
            g.fdp.mean,
            g.tpr.mean
        );
    }
    println!("wrote {}", parent_of(&files.reports).display());
    Ok(())
}

fn parent_of(p: &Path) -> &Path {
    p.parent().unwrap_or(p)
}

fn report_selection(selected: &[usize]) {
    let ids: Vec<String> = selected.iter().map(|j| (j + 1).to_string()).collect();
    println!("selected {} covariates: {}", selected.len(), ids.join(" "));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Select(a) => select_cmd(a),
        Command::Baseline(a) => baseline_cmd(a),
        Command::Benchmark(a) => benchmark_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
