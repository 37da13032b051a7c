//! Fits the product-prior linear model with ADVI and runs BayesMS selection.
//!
//! ```text
//! cargo run --release --example fit_and_select
//! ```

use mirrorfdr::advi::{fit, AdviConfig};
use mirrorfdr::harness::compute_metrics;
use mirrorfdr::models::{coefficient_draws, coefficient_means, layout_for_data};
use mirrorfdr::simdata::simulate;
use mirrorfdr::{bayes_ms, Family, ModelSpec, Prior, ScenarioConfig};

fn main() -> mirrorfdr::Result<()> {
    let data = simulate(&ScenarioConfig::linear(200, 100, 10).with_seed(3))?.standardized();
    let model = ModelSpec::new(Family::Linear, Prior::default());
    let advi = AdviConfig {
        n_mc: 16,
        step_size: 0.01,
        seed: 3,
        ..Default::default()
    };
    let trace = fit(&model, &data, &advi)?;
    println!(
        "ELBO {:.1} -> {:.1} in {:.1}s",
        trace.elbo[0],
        trace.elbo.last().unwrap(),
        trace.wall_time_seconds
    );

    let layout = layout_for_data(&model, &data)?;
    let draws = coefficient_draws(&trace.posterior, &model, &layout, 2000, 3)?;
    let means = coefficient_means(&draws);
    let truth = data.truth.as_ref().unwrap();
    for j in truth.active_indices() {
        println!("  beta[{j:>2}] true {:>5.1}  posterior mean {:>6.3}", truth.beta[j], means[j]);
    }

    let result = bayes_ms(&draws, 0.1, 3)?;
    let (fdp, tpr) = compute_metrics(&result.selected, truth);
    println!(
        "t = {:?}, tau = {:?}, selected {:?}",
        result.t_alpha, result.tau_alpha, result.selected
    );
    println!("FDP {fdp:.3}  TPR {tpr:.3}");
    Ok(())
}
