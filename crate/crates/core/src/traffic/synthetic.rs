use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ground_truth, GroundTruth, TraceEvent};
use crate::error::{Error, Result};
use crate::key::FlowKey;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interleaving {
    /// Packets of all flows in a seeded random order.
    #[default]
    Shuffled,
    /// Flow by flow, largest flow first.
    Sorted,
}

/// Named traffic mixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Backbone-like skew: `s = 1.1`, flows capped at 10^5 packets.
    Backbone,
    /// Campus-like, heavier elephants: `s = 1.3`, cap 2.9 * 10^5.
    Campus,
    /// Sampled access link where nearly every flow has under 5 packets.
    IspSampled,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Backbone => "backbone",
            Preset::Campus => "campus",
            Preset::IspSampled => "isp-sampled",
        }
    }

    /// `(zipf exponent, max flow size)`.
    pub fn parameters(&self) -> (f64, u64) {
        match self {
            Preset::Backbone => (1.1, 100_000),
            Preset::Campus => (1.3, 290_000),
            Preset::IspSampled => (0.4, 5),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "backbone" => Ok(Preset::Backbone),
            "campus" => Ok(Preset::Campus),
            "isp-sampled" | "isp" => Ok(Preset::IspSampled),
            other => Err(Error::invalid(format!("unknown preset `{other}`"))),
        }
    }
}

/// Zipf-by-rank flow sizes: the flow of rank `i` gets
/// `round(max_flow_size * i^-s)` packets, clamped to `[1, max_flow_size]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub flow_count: usize,
    pub zipf_exponent: f64,
    pub max_flow_size: u64,
    pub seed: u64,
    pub interleaving: Interleaving,
}

impl SyntheticSpec {
    pub fn preset(preset: Preset, flow_count: usize, seed: u64) -> Self {
        let (zipf_exponent, max_flow_size) = preset.parameters();
        SyntheticSpec {
            flow_count,
            zipf_exponent,
            max_flow_size,
            seed,
            interleaving: Interleaving::Shuffled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.flow_count == 0 {
            return Err(Error::config("synthetic trace needs at least one flow"));
        }
        if !(self.zipf_exponent > 0.0 && self.zipf_exponent.is_finite()) {
            return Err(Error::config(format!("zipf exponent {} must be > 0", self.zipf_exponent)));
        }
        if self.max_flow_size == 0 {
            return Err(Error::config("max flow size must be at least 1"));
        }
        Ok(())
    }

    /// Packet count of the flow at 1-based `rank`.
    pub fn flow_size(&self, rank: usize) -> u64 {
        let raw = (self.max_flow_size as f64 * (rank as f64).powf(-self.zipf_exponent)).round();
        (raw as u64).clamp(1, self.max_flow_size)
    }
}

/// `count` distinct uniformly random flow keys, deterministic per seed.
pub fn distinct_random_keys(count: usize, seed: u64) -> Vec<FlowKey> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut keys = Vec::with_capacity(count);
    while keys.len() < count {
        let k = FlowKey::new(rng.gen(), rng.gen(), rng.gen(), rng.gen(), rng.gen());
        if seen.insert(k) {
            keys.push(k);
        }
    }
    keys
}

pub fn generate_trace(spec: &SyntheticSpec) -> Result<(Vec<TraceEvent>, GroundTruth)> {
    spec.validate()?;
    let keys = distinct_random_keys(spec.flow_count, spec.seed);
    let sizes: Vec<u64> = (1..=spec.flow_count).map(|r| spec.flow_size(r)).collect();
    let total: u64 = sizes.iter().sum();

    let mut order: Vec<u32> = Vec::with_capacity(total as usize);
    for (i, &s) in sizes.iter().enumerate() {
        order.extend(std::iter::repeat_n(i as u32, s as usize));
    }
    if spec.interleaving == Interleaving::Shuffled {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x7e11_5eed_0000_0001);
        order.shuffle(&mut rng);
    }
    let events: Vec<TraceEvent> = order
        .into_iter()
        .enumerate()
        .map(|(t, i)| TraceEvent {
            timestamp: t as u64,
            key: keys[i as usize],
        })
        .collect();
    let truth = ground_truth(&events);
    Ok((events, truth))
}
