//! Runs a benchmark preset and prints the per-method summary.
//!
//! ```text
//! cargo run --release --example benchmark -- configs/linear_desk.json bayesms,ds [results/]
//! ```

use std::path::PathBuf;

use mirrorfdr::harness::{
    parse_methods, resolve_workers, run_replicates, summarize, write_outputs, BenchmarkConfig,
};

fn main() -> mirrorfdr::Result<()> {
    let mut args = std::env::args().skip(1);
    let config_path = PathBuf::from(args.next().unwrap_or_else(|| "configs/linear_desk.json".into()));
    let methods = parse_methods(&args.next().unwrap_or_else(|| "bayesms,ds".into()))?;
    let out = args.next().map(PathBuf::from);

    let config = BenchmarkConfig::from_json_file(&config_path)?;
    let workers = resolve_workers(None);
    println!(
        "{}: {} replicates x {} methods on {workers} workers",
        config.scenario_id(),
        config.replicates,
        methods.len()
    );
    let reports = run_replicates(&config, &methods, workers)?;
    for r in &reports {
        println!(
            "  rep {:>2} {:<8} fdp {:.3} tpr {:.3} sel {:>3} {:>6.1}s {}",
            r.replicate,
            r.method.as_str(),
            r.fdp,
            r.tpr,
            r.n_selected,
            r.runtime_seconds,
            r.error.as_deref().unwrap_or("")
        );
    }
    let summary = summarize(&reports);
    println!("method    fdp_mean tpr_mean fdp_q90 tpr_q10 failures");
    for g in &summary.groups {
        println!(
            "{:<9} {:>8.3} {:>8.3} {:>7.3} {:>7.3} {:>8}",
            g.method.as_str(),
            g.fdp.mean,
            g.tpr.mean,
            g.fdp.q90,
            g.tpr.q10,
            g.failures
        );
    }
    if let Some(dir) = out {
        let files = write_outputs(&dir, &reports, &summary)?;
        println!("wrote {}", files.reports.display());
    }
    Ok(())
}
