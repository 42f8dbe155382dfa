//! HashFlow: exact records for elephants in a main table, digest summaries
//! for mice in an ancillary table, with collision resolution across `d`
//! probes and promotion of growing ancillary entries back into the main table.

mod table;

pub use table::{pipelined_stage_sizes, AncillaryCell, AncillaryTable, Layout, MainTable};

use crate::baselines::{linear_counting, CardinalityEstimate};
use crate::error::{Error, Result};
use crate::hash::{reduce, Digest, HashFamily};
use crate::key::{FlowKey, FlowRecord};
use crate::sketch::{Algorithm, FlowCollector, OpTally, Snapshot};

use table::matches;

#[derive(Clone, Debug, PartialEq)]
pub struct HashFlowConfig {
    pub main_buckets: usize,
    pub ancillary_cells: usize,
    pub depth: usize,
    pub layout: Layout,
    pub digest_width: u32,
    pub counter_width: u32,
    pub seed: u64,
}

impl HashFlowConfig {
    /// Pipelined main table with `d = 3`, `alpha = 0.7`, 8-bit digests and
    /// counters, and as many ancillary cells as main buckets.
    pub fn new(main_buckets: usize, seed: u64) -> Self {
        HashFlowConfig {
            main_buckets,
            ancillary_cells: main_buckets,
            depth: 3,
            layout: Layout::Pipelined { alpha: 0.7 },
            digest_width: 8,
            counter_width: 8,
            seed,
        }
    }

    pub fn with_layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_ancillary_cells(mut self, cells: usize) -> Self {
        self.ancillary_cells = cells;
        self
    }
}

/// The lowest-count record among `d` colliding probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SentinelRef {
    /// Global bucket position in the main table.
    pub position: usize,
    /// Probe (and, for the pipelined layout, stage) index, 0-based.
    pub stage: usize,
    pub min_count: u32,
}

/// Which branch of the update algorithm a packet took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateOutcome {
    HitMain,
    InsertedMain,
    HitAncillary,
    ReplacedAncillary,
    /// The ancillary entry replaced the sentinel record `evicted`.
    Promoted { evicted: FlowRecord },
}

#[derive(Clone, Copy, Debug)]
enum MainProbe {
    Empty(usize),
    Match(usize),
    Collision(SentinelRef),
}

#[derive(Clone, Debug)]
pub struct HashFlow {
    config: HashFlowConfig,
    family: HashFamily,
    main: MainTable,
    ancillary: AncillaryTable,
    tally: OpTally,
}

impl HashFlow {
    pub fn new(config: HashFlowConfig) -> Result<Self> {
        if config.depth == 0 {
            return Err(Error::config("depth must be at least 1"));
        }
        if config.main_buckets < config.depth {
            return Err(Error::config(format!(
                "main table needs n >= d, got n={} d={}",
                config.main_buckets, config.depth
            )));
        }
        if !(1..=32).contains(&config.digest_width) {
            return Err(Error::config(format!(
                "digest width {} outside 1..=32",
                config.digest_width
            )));
        }
        let main = MainTable::new(config.main_buckets, config.depth, config.layout)?;
        let ancillary = AncillaryTable::new(config.ancillary_cells, config.counter_width)?;
        // h_1..h_d for the main table, g_1 for the ancillary table.
        let family = HashFamily::new(config.seed, config.depth + 1)?;
        Ok(HashFlow {
            config,
            family,
            main,
            ancillary,
            tally: OpTally::default(),
        })
    }

    pub fn config(&self) -> &HashFlowConfig {
        &self.config
    }

    pub fn main_table(&self) -> &MainTable {
        &self.main
    }

    pub fn ancillary_table(&self) -> &AncillaryTable {
        &self.ancillary
    }

    pub fn hash_family(&self) -> &HashFamily {
        &self.family
    }

    /// Walks the `d` probes until an empty or matching bucket turns up.
    /// Returns the probe result, the raw `h_1` output, and the probes made.
    #[inline]
    fn probe_main(&self, key: &FlowKey) -> (MainProbe, u64, usize) {
        let mut h1 = 0;
        let mut sentinel: Option<SentinelRef> = None;
        for probe in 0..self.main.depth() {
            let h = self.family.hash64(probe + 1, key);
            if probe == 0 {
                h1 = h;
            }
            let stage = self.main.stage(probe);
            let pos = stage.start + reduce(h, stage.len());
            let bucket = self.main.bucket(pos);
            if bucket.is_empty() {
                return (MainProbe::Empty(pos), h1, probe + 1);
            }
            if bucket.key == *key {
                return (MainProbe::Match(pos), h1, probe + 1);
            }
            // Strict `<`: the earliest probe wins ties.
            if sentinel.is_none_or(|s| bucket.count < s.min_count) {
                sentinel = Some(SentinelRef {
                    position: pos,
                    stage: probe,
                    min_count: bucket.count,
                });
            }
        }
        let sentinel = sentinel.expect("depth >= 1");
        (MainProbe::Collision(sentinel), h1, self.main.depth())
    }

    #[inline]
    fn ancillary_index(&self, key: &FlowKey) -> usize {
        self.family
            .index(self.main.depth() + 1, key, self.ancillary.len())
    }

    /// Processes one packet of `key`.
    pub fn update(&mut self, key: &FlowKey) -> UpdateOutcome {
        let (probe, h1, probes) = self.probe_main(key);
        self.tally.hash(probes as u64);
        self.tally.mem(probes as u64);
        let sentinel = match probe {
            MainProbe::Empty(pos) => {
                self.main.install(pos, FlowRecord::new(*key, 1));
                self.tally.mem(1);
                return UpdateOutcome::InsertedMain;
            }
            MainProbe::Match(pos) => {
                let b = self.main.bucket_mut(pos);
                b.count = b.count.saturating_add(1);
                self.tally.mem(1);
                return UpdateOutcome::HitMain;
            }
            MainProbe::Collision(s) => s,
        };

        let idx = self.ancillary_index(key);
        let digest = Digest::from_hash(h1, self.config.digest_width);
        self.tally.hash(1);
        self.tally.mem(1);
        let cell = self.ancillary.cell(idx);
        if cell.count == 0 || cell.digest != digest {
            self.ancillary.set(idx, digest, 1);
            self.tally.mem(1);
            UpdateOutcome::ReplacedAncillary
        } else if cell.count < sentinel.min_count {
            self.ancillary.set(idx, digest, cell.count + 1);
            self.tally.mem(1);
            UpdateOutcome::HitAncillary
        } else {
            let evicted = *self.main.bucket(sentinel.position);
            self.main
                .install(sentinel.position, FlowRecord::new(*key, cell.count + 1));
            self.ancillary.clear(idx);
            self.tally.mem(2);
            UpdateOutcome::Promoted { evicted }
        }
    }

    /// The sentinel `key` would see right now, if all its probes collide.
    pub fn sentinel(&self, key: &FlowKey) -> Option<SentinelRef> {
        match self.probe_main(key).0 {
            MainProbe::Collision(s) => Some(s),
            _ => None,
        }
    }

    /// Exact resident count, else the matching ancillary count, else 0.
    pub fn query(&self, key: &FlowKey) -> u32 {
        for probe in 0..self.main.depth() {
            let stage = self.main.stage(probe);
            let pos = stage.start + self.family.index(probe + 1, key, stage.len());
            let b = self.main.bucket(pos);
            if matches(b, key) {
                return b.count;
            }
        }
        let cell = self.ancillary.cell(self.ancillary_index(key));
        let digest = Digest::from_hash(self.family.hash64(1, key), self.config.digest_width);
        if cell.count > 0 && cell.digest == digest {
            cell.count
        } else {
            0
        }
    }

    /// Every occupied main-table bucket. Ancillary cells carry no full ID.
    pub fn export_records(&self) -> Vec<FlowRecord> {
        self.main.records().copied().collect()
    }

    /// Occupied main buckets plus linear counting over the ancillary table.
    pub fn estimate_cardinality(&self) -> CardinalityEstimate {
        let lc = linear_counting(self.ancillary.len(), self.ancillary.empty_cells())
            .expect("empty cells never exceed table size");
        CardinalityEstimate {
            value: self.main.occupied() as u64 + lc.value,
            overflow: lc.overflow,
        }
    }

    /// Fraction of non-empty main-table buckets.
    pub fn occupancy(&self) -> f64 {
        self.main.occupied() as f64 / self.main.len() as f64
    }
}

impl FlowCollector for HashFlow {
    fn algorithm(&self) -> Algorithm {
        Algorithm::HashFlow
    }

    fn process(&mut self, key: &FlowKey) {
        self.update(key);
    }

    fn tally(&self) -> OpTally {
        self.tally
    }

    fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            records: self.export_records(),
            cardinality: self.estimate_cardinality(),
            estimator: Box::new(move |k| self.query(k)),
        }
    }
}
