use crate::simdata::GroundTruth;

/// Realized `(fdp, tpr)` of a selection. FDP uses a `max(·, 1)` denominator,
/// so an empty selection has FDP 0. TPR is 1 under a null truth.
pub fn compute_metrics(selected: &[usize], truth: &GroundTruth) -> (f64, f64) {
    let true_hits = selected
        .iter()
        .filter(|&&j| truth.active_mask.get(j).copied().unwrap_or(false))
        .count();
    let false_hits = selected.len() - true_hits;
    let fdp = false_hits as f64 / selected.len().max(1) as f64;
    let p1 = truth.n_active();
    let tpr = if p1 == 0 {
        1.0
    } else {
        true_hits as f64 / p1 as f64
    };
    (fdp, tpr)
}
