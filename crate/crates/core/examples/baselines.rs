//! Runs every frequentist baseline on one linear dataset.
//!
//! ```text
//! cargo run --release --example baselines
//! ```

use mirrorfdr::baselines::{bh::bh_result, ds_select, knockoff_select};
use mirrorfdr::harness::compute_metrics;
use mirrorfdr::simdata::{build_block_toeplitz, simulate_with_covariance};
use mirrorfdr::ScenarioConfig;

fn main() -> mirrorfdr::Result<()> {
    let mut cfg = ScenarioConfig::linear(400, 100, 15).with_seed(11);
    cfg.rho = 0.3;
    let sigma = build_block_toeplitz(&cfg.covariance_spec())?;
    let data = simulate_with_covariance(&cfg, &sigma)?;
    let truth = data.truth.as_ref().unwrap();

    let runs = [
        ("data splitting", ds_select(&data, 0.1, 1)?),
        ("knockoff+", knockoff_select(&data, &sigma, 0.1, 1)?),
        ("BH on OLS", bh_result(&data, 0.1)?),
    ];
    for (name, result) in runs {
        let (fdp, tpr) = compute_metrics(&result.selected, truth);
        println!(
            "{name:<15} selected {:>3}  FDP {fdp:.3}  TPR {tpr:.3}",
            result.selected.len()
        );
    }
    Ok(())
}
