use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::runner::{Method, ReplicateReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Linearly interpolated quantile of sorted data, `h = (n - 1) q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mean = if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        };
        Self {
            mean,
            median: quantile_sorted(&v, 0.5),
            q10: quantile_sorted(&v, 0.1),
            q90: quantile_sorted(&v, 0.9),
        }
    }
}

/// Aggregate over the successful reports of one (scenario, method) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub scenario: String,
    pub method: Method,
    pub replicates: usize,
    pub failures: usize,
    pub fdp: Quantiles,
    pub tpr: Quantiles,
    pub mean_n_selected: f64,
    pub mean_runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub groups: Vec<MethodSummary>,
}

impl BenchmarkSummary {
    pub fn get(&self, scenario: &str, method: Method) -> Option<&MethodSummary> {
        self.groups
            .iter()
            .find(|g| g.scenario == scenario && g.method == method)
    }

    /// Whether `better` has a higher mean TPR than `other` in `scenario`.
    /// `None` when either group is missing or has no successful replicate.
    pub fn tpr_exceeds(&self, scenario: &str, better: Method, other: Method) -> Option<bool> {
        let a = self.get(scenario, better)?.tpr.mean;
        let b = self.get(scenario, other)?.tpr.mean;
        (a.is_finite() && b.is_finite()).then_some(a > b)
    }
}

/// Groups by (scenario, method) in sorted order. Failed reports count toward
/// `failures` and are left out of the statistics.
pub fn summarize(reports: &[ReplicateReport]) -> BenchmarkSummary {
    let mut groups: BTreeMap<(String, Method), Vec<&ReplicateReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.scenario.clone(), r.method)).or_default().push(r);
    }
    let groups = groups
        .into_iter()
        .map(|((scenario, method), rs)| {
            let ok: Vec<&ReplicateReport> = rs.iter().copied().filter(|r| r.is_ok()).collect();
            let col = |f: fn(&ReplicateReport) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
            let mean = |v: Vec<f64>| {
                if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            };
            MethodSummary {
                scenario,
                method,
                replicates: rs.len(),
                failures: rs.len() - ok.len(),
                fdp: Quantiles::of(&col(|r| r.fdp)),
                tpr: Quantiles::of(&col(|r| r.tpr)),
                mean_n_selected: mean(col(|r| r.n_selected as f64)),
                mean_runtime_s: mean(col(|r| r.runtime_seconds)),
            }
        })
        .collect();
    BenchmarkSummary { groups }
}
