//! Evaluation metrics: flow set coverage, average relative error, heavy
//! hitter precision/recall/F1, and cardinality relative error.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::key::{FlowKey, FlowRecord};
use crate::traffic::GroundTruth;

/// Fraction of true flows reported with a correct ID; duplicates count once.
pub fn compute_fsc(reported: &[FlowRecord], truth: &GroundTruth) -> f64 {
    if truth.total_flows() == 0 {
        return 0.0;
    }
    let correct: HashSet<&FlowKey> = reported.iter().map(|r| &r.key).filter(|k| truth.contains(k)).collect();
    correct.len() as f64 / truth.total_flows() as f64
}

/// Mean of `|estimate / true - 1|` over `over` (all flows when `None`).
pub fn compute_are<F>(estimate: F, truth: &GroundTruth, over: Option<&HashSet<FlowKey>>) -> Result<f64>
where
    F: Fn(&FlowKey) -> u32,
{
    let err = |k: &FlowKey, real: u64| (estimate(k) as f64 / real as f64 - 1.0).abs();
    let (sum, n) = match over {
        None => truth
            .iter()
            .fold((0.0, 0usize), |(s, n), (k, real)| (s + err(k, real), n + 1)),
        Some(set) => {
            // Walk the truth so the float sum is independent of hash order.
            let (sum, n) = truth
                .iter()
                .filter(|(k, _)| set.contains(k))
                .fold((0.0, 0usize), |(s, n), (k, real)| (s + err(k, real), n + 1));
            if n != set.len() {
                let stray = set.iter().find(|k| !truth.contains(k)).expect("some key is missing");
                return Err(Error::invalid(format!("flow {stray} is not in the ground truth")));
            }
            (sum, n)
        }
    };
    if n == 0 {
        return Err(Error::invalid("average relative error over an empty flow set"));
    }
    Ok(sum / n as f64)
}

/// Reported keys whose record count exceeds `threshold`.
pub fn detect_heavy_hitters(reported: &[FlowRecord], threshold: u64) -> HashSet<FlowKey> {
    reported
        .iter()
        .filter(|r| r.count as u64 > threshold)
        .map(|r| r.key)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision `c/c1`, recall `c/c2`, and their harmonic mean.
///
/// An empty report scores precision 1 only when there is nothing to find;
/// recall is 1 when there are no real heavy hitters.
pub fn compute_f1(reported: &HashSet<FlowKey>, truth: &GroundTruth, threshold: u64) -> F1Score {
    let real = truth.heavy_hitters(threshold);
    let c = reported.intersection(&real).count() as f64;
    let (c1, c2) = (reported.len() as f64, real.len() as f64);
    let precision = match (c1 == 0.0, c2 == 0.0) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => c / c1,
    };
    let recall = if c2 == 0.0 { 1.0 } else { c / c2 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    F1Score { precision, recall, f1 }
}

/// `|estimate / true_n - 1|`.
pub fn compute_re(estimate: f64, true_n: usize) -> Result<f64> {
    if true_n == 0 {
        return Err(Error::invalid("relative error against zero flows"));
    }
    Ok((estimate / true_n as f64 - 1.0).abs())
}
