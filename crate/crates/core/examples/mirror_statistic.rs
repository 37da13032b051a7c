//! The mirror transform with its normal approximation, then the selection
//! steps on hand-made posterior draws.
//!
//! ```text
//! cargo run --example mirror_statistic
//! ```

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use mirrorfdr::mirror::{
    analytic_w_distribution, inclusion_probabilities, mirror, mirror_samples, optimal_threshold,
    select_covariates,
};

fn main() -> mirrorfdr::Result<()> {
    println!("m(2, 3) = {}, m(2, -3) = {}", mirror(2.0, 3.0), mirror(2.0, -3.0));

    println!("\nmirror statistic of two N(mu, 1) draws:");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for mu in [0.0, 0.5, 1.0, 3.0] {
        let approx = analytic_w_distribution(mu, 1.0)?;
        let normal = Normal::new(mu, 1.0).unwrap();
        let w: Vec<f64> = (0..200_000)
            .map(|_| mirror(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        let m = w.iter().sum::<f64>() / w.len() as f64;
        println!("  mu {mu:>3}: analytic mean {:.3} sd {:.3}, simulated mean {m:.3}", approx.mean, approx.sd);
    }

    // Five signals, fifteen nulls, 1000 posterior draws each.
    let p = 20;
    let draws = DMatrix::from_fn(1000, p, |_, j| {
        let centre = if j < 5 { 1.5 } else { 0.0 };
        Normal::new(centre, 0.4).unwrap().sample(&mut rng)
    });
    let ms = mirror_samples(&draws, 1)?;
    let (t, est) = optimal_threshold(&ms, 0.1);
    let t = t.value().expect("signals are well separated");
    let pi = inclusion_probabilities(&ms, t);
    let (tau, selected, _) = select_covariates(&pi, 0.1);
    println!("\nt = {t:.3} (estimated FDP {:.3}), tau = {tau:?}", est.unwrap());
    let shown: Vec<String> = pi.iter().map(|v| format!("{v:.2}")).collect();
    println!("pi = [{}]", shown.join(", "));
    println!("selected {selected:?}");
    Ok(())
}
