//! The surface every flow collector exposes to the benchmark harness.

use std::fmt;
use std::str::FromStr;

use crate::baselines::CardinalityEstimate;
use crate::error::Error;
use crate::key::{FlowKey, FlowRecord};

/// Running totals of hash computations and memory accesses.
///
/// A memory access is one bucket or cell read or write; a read-modify-write
/// of one cell counts as two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpTally {
    pub hash_ops: u64,
    pub mem_accesses: u64,
}

impl OpTally {
    #[inline]
    pub fn hash(&mut self, n: u64) {
        self.hash_ops += n;
    }

    #[inline]
    pub fn mem(&mut self, n: u64) {
        self.mem_accesses += n;
    }

    pub fn since(&self, earlier: &OpTally) -> OpTally {
        OpTally {
            hash_ops: self.hash_ops - earlier.hash_ops,
            mem_accesses: self.mem_accesses - earlier.mem_accesses,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    HashFlow,
    HashPipe,
    Elastic,
    FlowRadar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::HashFlow,
        Algorithm::HashPipe,
        Algorithm::Elastic,
        Algorithm::FlowRadar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::HashFlow => "hashflow",
            Algorithm::HashPipe => "hashpipe",
            Algorithm::Elastic => "elastic",
            Algorithm::FlowRadar => "flowradar",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hashflow" => Ok(Algorithm::HashFlow),
            "hashpipe" => Ok(Algorithm::HashPipe),
            "elastic" | "elasticsketch" => Ok(Algorithm::Elastic),
            "flowradar" => Ok(Algorithm::FlowRadar),
            other => Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// What a collector reports once the measurement epoch ends.
pub struct Snapshot<'a> {
    /// Flow records the collector can name by full flow ID.
    pub records: Vec<FlowRecord>,
    pub cardinality: CardinalityEstimate,
    /// Per-flow size estimate; 0 when nothing can be reported.
    pub estimator: Box<dyn Fn(&FlowKey) -> u32 + Sync + 'a>,
}

pub trait FlowCollector: Send {
    fn algorithm(&self) -> Algorithm;

    /// Processes one packet of flow `key`.
    fn process(&mut self, key: &FlowKey);

    fn tally(&self) -> OpTally;

    fn snapshot(&self) -> Snapshot<'_>;
}
