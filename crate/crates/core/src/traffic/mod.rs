//! Packet traces: CSV ingestion, synthetic skewed generation, flow selection
//! and the exact ground-truth oracle.

mod io;
mod synthetic;

pub use io::{create_output, parse_trace, read_records, read_trace, write_records, write_trace, TraceReader};
pub use synthetic::{distinct_random_keys, generate_trace, Interleaving, Preset, SyntheticSpec};

use std::collections::HashSet;

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::key::{FlowKey, FlowRecord};

/// One packet arrival.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    /// Microseconds; informational only.
    pub timestamp: u64,
    pub key: FlowKey,
}

/// Exact per-flow packet counts, in order of first appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    flows: IndexMap<FlowKey, u64>,
    total_packets: u64,
}

impl GroundTruth {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a TraceEvent>) -> Self {
        let mut gt = GroundTruth::default();
        for e in events {
            gt.add(e.key);
        }
        gt
    }

    pub fn add(&mut self, key: FlowKey) {
        *self.flows.entry(key).or_default() += 1;
        self.total_packets += 1;
    }

    pub fn total_flows(&self) -> usize {
        self.flows.len()
    }

    pub fn total_packets(&self) -> u64 {
        self.total_packets
    }

    pub fn size(&self, key: &FlowKey) -> Option<u64> {
        self.flows.get(key).copied()
    }

    pub fn contains(&self, key: &FlowKey) -> bool {
        self.flows.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FlowKey, u64)> {
        self.flows.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &FlowKey> {
        self.flows.keys()
    }

    /// Flows with more than `threshold` packets.
    pub fn heavy_hitters(&self, threshold: u64) -> HashSet<FlowKey> {
        self.iter()
            .filter(|(_, c)| *c > threshold)
            .map(|(k, _)| *k)
            .collect()
    }

    /// Flow records in first-appearance order (counts saturate at `u32::MAX`).
    pub fn records(&self) -> Vec<FlowRecord> {
        self.iter()
            .map(|(k, c)| FlowRecord::new(*k, c.min(u32::MAX as u64) as u32))
            .collect()
    }
}

pub fn ground_truth(events: &[TraceEvent]) -> GroundTruth {
    GroundTruth::from_events(events)
}

/// How `select_flows` picks its subset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// The first flows to appear.
    #[default]
    FirstSeen,
    /// A seeded uniform sample of the distinct flows.
    Random { seed: u64 },
}

/// Keeps every packet of `target` flows chosen by `selection`, in trace order.
pub fn select_flows(
    events: &[TraceEvent],
    target: usize,
    selection: Selection,
) -> Result<(Vec<TraceEvent>, GroundTruth)> {
    let all = ground_truth(events);
    if all.total_flows() < target {
        return Err(Error::InsufficientFlows {
            requested: target,
            available: all.total_flows(),
        });
    }
    let keep: HashSet<FlowKey> = match selection {
        Selection::FirstSeen => all.keys().take(target).copied().collect(),
        Selection::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let keys: Vec<&FlowKey> = all.keys().collect();
            sample(&mut rng, keys.len(), target)
                .into_iter()
                .map(|i| *keys[i])
                .collect()
        }
    };
    let kept: Vec<TraceEvent> = events.iter().filter(|e| keep.contains(&e.key)).copied().collect();
    let truth = ground_truth(&kept);
    Ok((kept, truth))
}
