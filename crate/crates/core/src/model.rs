//! Probabilistic utilization model of HashFlow's main table, and its
//! comparison against simulation.
//!
//! `p_k` is the probability that a bucket is still empty after `k` rounds of
//! insertion. Multi-hash: `p_1 = e^{-m/n}`, `p_k = p_{k-1} e^{1 - m/n - p_{k-1}}`,
//! utilization `1 - p_d`. Pipelined: stage `k` holds `alpha^{k-1} n_1`
//! buckets, `-ln p_{k+1} = (-ln p_k - 1 + p_k) / alpha`, and utilization is the
//! bucket-weighted mean of `1 - p_k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hashflow::{HashFlow, HashFlowConfig, Layout};
use crate::traffic::distinct_random_keys;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutput {
    pub empty_probs: Vec<f64>,
    /// Expected fraction of empty buckets, `1 - utilization`, kept separately
    /// because it stays resolvable when utilization rounds to 1.
    pub empty_fraction: f64,
    pub utilization: f64,
}

/// Keeps an empty probability strictly positive once it drops below f64 range.
fn floor_prob(p: f64) -> f64 {
    p.max(f64::from_bits(1))
}

fn check(m: f64, n: f64, d: usize) -> Result<()> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::invalid(format!("flow count {m} must be a finite m >= 0")));
    }
    if !n.is_finite() || n < 1.0 {
        return Err(Error::invalid(format!("bucket count {n} must be >= 1")));
    }
    if d == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    Ok(())
}

pub fn multihash_model(m: f64, n: f64, d: usize) -> Result<ModelOutput> {
    check(m, n, d)?;
    let load = m / n;
    let mut probs = Vec::with_capacity(d);
    let mut p = floor_prob((-load).exp());
    probs.push(p);
    for _ in 1..d {
        p = floor_prob(p * (1.0 - load - p).exp());
        probs.push(p);
    }
    Ok(ModelOutput {
        utilization: 1.0 - p,
        empty_fraction: p,
        empty_probs: probs,
    })
}

pub fn pipelined_model(m: f64, n: f64, d: usize, alpha: f64) -> Result<ModelOutput> {
    check(m, n, d)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("pipeline weight {alpha} outside (0, 1)")));
    }
    let share = (1.0 - alpha) / (1.0 - alpha.powi(d as i32));
    let n1 = share * n;
    // Work with -ln p so that heavy loads do not underflow.
    let mut neg_log = m / n1;
    let mut probs = Vec::with_capacity(d);
    for _ in 0..d {
        probs.push(floor_prob((-neg_log).exp()));
        let p = *probs.last().unwrap();
        neg_log = (neg_log - 1.0 + p) / alpha;
    }
    let weighted: f64 = probs
        .iter()
        .enumerate()
        .map(|(k, p)| alpha.powi(k as i32) * p)
        .sum();
    let empty_fraction = share * weighted;
    Ok(ModelOutput {
        utilization: 1.0 - empty_fraction,
        empty_fraction,
        empty_probs: probs,
    })
}

/// Model prediction for the given layout.
pub fn model(layout: Layout, m: f64, n: f64, d: usize) -> Result<ModelOutput> {
    match layout {
        Layout::MultiHash => multihash_model(m, n, d),
        Layout::Pipelined { alpha } => pipelined_model(m, n, d, alpha),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationComparison {
    pub model: ModelOutput,
    pub occupancies: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

impl SimulationComparison {
    /// Model utilization minus mean simulated occupancy.
    pub fn gap(&self) -> f64 {
        self.model.utilization - self.mean
    }
}

/// Occupancy of a fresh HashFlow main table fed `m` distinct single-packet flows.
pub fn simulate_occupancy(layout: Layout, m: usize, n: usize, d: usize, seed: u64) -> Result<f64> {
    let mut hf = HashFlow::new(
        HashFlowConfig::new(n, seed ^ 0x005e_ed0f_4a54)
            .with_layout(layout)
            .with_depth(d),
    )?;
    for k in distinct_random_keys(m, seed) {
        hf.update(&k);
    }
    Ok(hf.occupancy())
}

/// Runs `seeds` independent simulations (in parallel) next to the model.
pub fn model_vs_simulation(
    layout: Layout,
    m: usize,
    n: usize,
    d: usize,
    seeds: usize,
    base_seed: u64,
) -> Result<SimulationComparison> {
    if seeds == 0 {
        return Err(Error::invalid("need at least one simulation seed"));
    }
    let predicted = model(layout, m as f64, n as f64, d)?;
    let occupancies = (0..seeds as u64)
        .into_par_iter()
        .map(|s| simulate_occupancy(layout, m, n, d, base_seed.wrapping_add(s)))
        .collect::<Result<Vec<_>>>()?;
    let mean = occupancies.iter().sum::<f64>() / seeds as f64;
    let var = occupancies.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / seeds as f64;
    Ok(SimulationComparison {
        model: predicted,
        occupancies,
        mean,
        std_dev: var.sqrt(),
    })
}
