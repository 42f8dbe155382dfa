//! HashPipe: a pipeline of equal-size tables. The first stage always admits
//! the arriving flow; later stages keep the larger of resident and carried.

use crate::baselines::CardinalityEstimate;
use crate::error::{Error, Result};
use crate::hash::HashFamily;
use crate::key::{FlowKey, FlowRecord};
use crate::sketch::{Algorithm, FlowCollector, OpTally, Snapshot};

pub const DEFAULT_STAGES: usize = 4;

#[derive(Clone, Debug)]
pub struct HashPipe {
    family: HashFamily,
    stages: Vec<Vec<FlowRecord>>,
    tally: OpTally,
    discarded_records: u64,
    discarded_packets: u64,
}

impl HashPipe {
    /// `stages` tables of `cells_per_stage` buckets each.
    pub fn new(stages: usize, cells_per_stage: usize, seed: u64) -> Result<Self> {
        if stages == 0 || cells_per_stage == 0 {
            return Err(Error::config("hashpipe needs at least one stage and one cell per stage"));
        }
        Ok(HashPipe {
            family: HashFamily::new(seed, stages)?,
            stages: vec![vec![FlowRecord::EMPTY; cells_per_stage]; stages],
            tally: OpTally::default(),
            discarded_records: 0,
            discarded_packets: 0,
        })
    }

    /// Four equal stages sharing `total_cells`.
    pub fn with_total_cells(total_cells: usize, seed: u64) -> Result<Self> {
        Self::new(DEFAULT_STAGES, total_cells / DEFAULT_STAGES, seed)
    }

    pub fn stage(&self, k: usize) -> &[FlowRecord] {
        &self.stages[k]
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Records pushed out of the last stage so far.
    pub fn discarded_records(&self) -> u64 {
        self.discarded_records
    }

    pub fn discarded_packets(&self) -> u64 {
        self.discarded_packets
    }

    #[inline]
    fn slot(&self, stage: usize, key: &FlowKey) -> usize {
        self.family.index(stage + 1, key, self.stages[stage].len())
    }

    pub fn update(&mut self, key: &FlowKey) {
        let idx = self.slot(0, key);
        self.tally.hash(1);
        self.tally.mem(2);
        let first = &mut self.stages[0][idx];
        if first.is_empty() {
            *first = FlowRecord::new(*key, 1);
            return;
        }
        if first.key == *key {
            first.count = first.count.saturating_add(1);
            return;
        }
        let mut carried = std::mem::replace(first, FlowRecord::new(*key, 1));

        for stage in 1..self.stages.len() {
            let idx = self.slot(stage, &carried.key);
            self.tally.hash(1);
            self.tally.mem(1);
            let resident = &mut self.stages[stage][idx];
            if resident.is_empty() {
                *resident = carried;
                self.tally.mem(1);
                return;
            }
            if resident.key == carried.key {
                resident.count = resident.count.saturating_add(carried.count);
                self.tally.mem(1);
                return;
            }
            // Ties keep the resident.
            if carried.count > resident.count {
                std::mem::swap(resident, &mut carried);
                self.tally.mem(1);
            }
        }
        self.discarded_records += 1;
        self.discarded_packets += carried.count as u64;
    }

    /// Sum of every fragment of `key`'s record across stages.
    pub fn query(&self, key: &FlowKey) -> u32 {
        (0..self.stages.len())
            .map(|s| &self.stages[s][self.slot(s, key)])
            .filter(|r| !r.is_empty() && r.key == *key)
            .map(|r| r.count)
            .fold(0u32, u32::saturating_add)
    }

    /// Table scan; a flow split across stages appears once per fragment.
    pub fn records(&self) -> Vec<FlowRecord> {
        self.stages
            .iter()
            .flatten()
            .filter(|r| !r.is_empty())
            .copied()
            .collect()
    }

    pub fn total_count(&self) -> u64 {
        self.stages.iter().flatten().map(|r| r.count as u64).sum()
    }

    /// Number of stored records.
    pub fn cardinality(&self) -> CardinalityEstimate {
        CardinalityEstimate {
            value: self.stages.iter().flatten().filter(|r| !r.is_empty()).count() as u64,
            overflow: false,
        }
    }
}

impl FlowCollector for HashPipe {
    fn algorithm(&self) -> Algorithm {
        Algorithm::HashPipe
    }

    fn process(&mut self, key: &FlowKey) {
        self.update(key);
    }

    fn tally(&self) -> OpTally {
        self.tally
    }

    fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            records: self.records(),
            cardinality: self.cardinality(),
            estimator: Box::new(move |k| self.query(k)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(i: u32) -> FlowKey {
        FlowKey::new(i, i.wrapping_mul(7), 1, 2, 17)
    }

    #[test]
    fn first_packet_lands_in_stage_one() {
        let mut hp = HashPipe::new(4, 16, 1).unwrap();
        hp.update(&key(1));
        assert_eq!(hp.records(), vec![FlowRecord::new(key(1), 1)]);
        assert_eq!(hp.stage(0).iter().filter(|r| !r.is_empty()).count(), 1);
    }

    #[test]
    fn alternating_colliding_flows_split_but_conserve() {
        // One cell per stage: every pair of flows collides everywhere.
        let mut hp = HashPipe::new(4, 1, 9).unwrap();
        let (f, g) = (key(1), key(2));
        let mut sent = 0u64;
        for i in 0..6 {
            hp.update(if i % 2 == 0 { &f } else { &g });
            sent += 1;
            if hp.discarded_records() == 0 {
                assert_eq!(hp.total_count(), sent);
            }
        }
        let recs = hp.records();
        assert!(recs.iter().any(|r| r.key == f));
        assert!(recs.iter().any(|r| r.key == g));
        assert_eq!(hp.discarded_records(), 0);
        assert_eq!(hp.query(&f) + hp.query(&g), 6);
        assert_eq!(hp.query(&f), 3);
    }

    #[test]
    fn eviction_fragments_a_flow() {
        let mut hp = HashPipe::new(4, 1, 3).unwrap();
        let (a, b) = (key(10), key(11));
        for k in [a, a, a, b, a] {
            hp.update(&k);
        }
        let fragments = hp.records().iter().filter(|r| r.key == a).count();
        assert!(fragments >= 2, "{:?}", hp.records());
        assert_eq!(hp.query(&a), 4);
    }

    proptest! {
        #[test]
        fn conserves_until_discard(flows in proptest::collection::vec(0u32..40, 1..300), seed: u64) {
            let mut hp = HashPipe::new(4, 8, seed).unwrap();
            for (i, f) in flows.iter().enumerate() {
                hp.update(&key(*f));
                prop_assert_eq!(hp.total_count() + hp.discarded_packets(), i as u64 + 1);
            }
        }

        #[test]
        fn hash_ops_bounded(flows in proptest::collection::vec(0u32..100, 1..300), seed: u64) {
            let mut hp = HashPipe::new(4, 4, seed).unwrap();
            for f in &flows {
                let before = hp.tally();
                hp.update(&key(*f));
                prop_assert!(hp.tally().since(&before).hash_ops <= 4);
            }
        }
    }
}
