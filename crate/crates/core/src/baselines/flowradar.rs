//! FlowRadar: a bloom filter for new-flow detection in front of an
//! invertible counting table, decoded offline by peeling pure cells.

use std::collections::HashMap;
use std::ops::Range;

use crate::baselines::{BloomFilter, CardinalityEstimate};
use crate::error::{Error, Result};
use crate::hash::HashFamily;
use crate::key::{FlowKey, FlowRecord};
use crate::sketch::{Algorithm, FlowCollector, OpTally, Snapshot};

pub const BLOOM_HASHES: usize = 4;
pub const COUNTING_HASHES: usize = 3;
/// Bloom bits per counting cell.
pub const BLOOM_BITS_PER_CELL: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowRadarConfig {
    pub counting_cells: usize,
    pub bloom_bits: usize,
    pub seed: u64,
}

impl FlowRadarConfig {
    pub fn new(counting_cells: usize, seed: u64) -> Self {
        FlowRadarConfig {
            counting_cells,
            bloom_bits: BLOOM_BITS_PER_CELL * counting_cells,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CountingCell {
    /// XOR of the 104-bit IDs of flows encoded here.
    pub flow_xor: u128,
    pub flow_count: u32,
    pub packet_count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowRadarDecode {
    pub records: Vec<FlowRecord>,
    pub fully_decoded: bool,
}

#[derive(Clone, Debug)]
pub struct FlowRadar {
    family: HashFamily,
    bloom: BloomFilter,
    cells: Vec<CountingCell>,
    /// Counting hash `j` addresses segment `j`, so a flow's cells are distinct.
    segments: [Range<usize>; COUNTING_HASHES],
    tally: OpTally,
}

impl FlowRadar {
    pub fn new(config: FlowRadarConfig) -> Result<Self> {
        let c = config.counting_cells;
        if c < COUNTING_HASHES {
            return Err(Error::config(format!(
                "flowradar needs at least {COUNTING_HASHES} counting cells, got {c}"
            )));
        }
        if config.bloom_bits == 0 {
            return Err(Error::config("flowradar bloom filter needs at least one bit"));
        }
        let segments = std::array::from_fn(|j| c * j / COUNTING_HASHES..c * (j + 1) / COUNTING_HASHES);
        Ok(FlowRadar {
            family: HashFamily::new(config.seed, BLOOM_HASHES + COUNTING_HASHES)?,
            bloom: BloomFilter::new(config.bloom_bits, 1, BLOOM_HASHES),
            cells: vec![CountingCell::default(); c],
            segments,
            tally: OpTally::default(),
        })
    }

    pub fn cells(&self) -> &[CountingCell] {
        &self.cells
    }

    pub fn bloom(&self) -> &BloomFilter {
        &self.bloom
    }

    /// The three counting cells of `key`.
    pub fn cell_indices(&self, key: &FlowKey) -> [usize; COUNTING_HASHES] {
        std::array::from_fn(|j| {
            let seg = &self.segments[j];
            seg.start + self.family.index(BLOOM_HASHES + 1 + j, key, seg.len())
        })
    }

    pub fn update(&mut self, key: &FlowKey) {
        let fresh = self.bloom.insert(&self.family, key);
        self.tally.hash((BLOOM_HASHES + COUNTING_HASHES) as u64);
        self.tally.mem(BLOOM_HASHES as u64 + if fresh { BLOOM_HASHES as u64 } else { 0 });
        let id = key.to_u128();
        for idx in self.cell_indices(key) {
            let cell = &mut self.cells[idx];
            if fresh {
                cell.flow_xor ^= id;
                cell.flow_count += 1;
            }
            cell.packet_count = cell.packet_count.wrapping_add(1);
            self.tally.mem(2);
        }
    }

    /// Peels cells holding exactly one flow until none remain.
    pub fn decode(&self) -> FlowRadarDecode {
        let mut cells = self.cells.clone();
        let mut records = Vec::new();
        let mut pure: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].flow_count == 1).collect();
        while let Some(i) = pure.pop() {
            if cells[i].flow_count != 1 {
                continue;
            }
            let key = FlowKey::from_u128(cells[i].flow_xor);
            let packets = cells[i].packet_count;
            records.push(FlowRecord::new(key, packets));
            for j in self.cell_indices(&key) {
                let c = &mut cells[j];
                c.flow_xor ^= key.to_u128();
                c.flow_count = c.flow_count.wrapping_sub(1);
                c.packet_count = c.packet_count.wrapping_sub(packets);
                if c.flow_count == 1 {
                    pure.push(j);
                }
            }
        }
        let fully_decoded = cells.iter().all(|c| c.flow_count == 0);
        FlowRadarDecode {
            records,
            fully_decoded,
        }
    }

    /// Linear counting over the bloom bits, divided by the bits set per flow.
    pub fn cardinality(&self) -> CardinalityEstimate {
        let w = self.bloom.bits() as f64;
        let z = self.bloom.zero_bits();
        let per_flow = BLOOM_HASHES as f64;
        if z == 0 {
            CardinalityEstimate {
                value: (w * w.ln() / per_flow).round() as u64,
                overflow: true,
            }
        } else {
            CardinalityEstimate {
                value: (w * (w / z as f64).ln() / per_flow).round() as u64,
                overflow: false,
            }
        }
    }
}

impl FlowCollector for FlowRadar {
    fn algorithm(&self) -> Algorithm {
        Algorithm::FlowRadar
    }

    fn process(&mut self, key: &FlowKey) {
        self.update(key);
    }

    fn tally(&self) -> OpTally {
        self.tally
    }

    fn snapshot(&self) -> Snapshot<'_> {
        let decoded = self.decode();
        let sizes: HashMap<FlowKey, u32> = decoded.records.iter().map(|r| (r.key, r.count)).collect();
        Snapshot {
            records: decoded.records,
            cardinality: self.cardinality(),
            estimator: Box::new(move |k| sizes.get(k).copied().unwrap_or(0)),
        }
    }
}
