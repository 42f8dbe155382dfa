//! ElasticSketch, hardware version: a pipeline of heavy-part sub-tables with
//! positive/negative votes, spilling into a one-row count-min light part.

use crate::baselines::{linear_counting, CardinalityEstimate, CountMinRow};
use crate::error::{Error, Result};
use crate::hash::HashFamily;
use crate::key::{FlowKey, FlowRecord};
use crate::sketch::{Algorithm, FlowCollector, OpTally, Snapshot};

#[derive(Clone, Debug, PartialEq)]
pub struct ElasticConfig {
    pub heavy_stages: usize,
    pub cells_per_stage: usize,
    pub light_cells: usize,
    pub light_width: u32,
    /// Eviction threshold on `vote_neg / vote_pos`.
    pub lambda: f64,
    pub seed: u64,
}

impl ElasticConfig {
    /// Three heavy sub-tables sharing `heavy_cells`, an equal number of 8-bit
    /// light counters, and `lambda = 8`.
    pub fn new(heavy_cells: usize, seed: u64) -> Self {
        ElasticConfig {
            heavy_stages: 3,
            cells_per_stage: heavy_cells / 3,
            light_cells: heavy_cells,
            light_width: 8,
            lambda: 8.0,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HeavyCell {
    pub key: FlowKey,
    pub vote_pos: u32,
    pub vote_neg: u32,
    /// Set on records installed by evicting another; their flow may also
    /// have packets in the light part.
    pub flag: bool,
}

impl HeavyCell {
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vote_pos == 0
    }
}

#[derive(Clone, Copy, Debug)]
struct Carried {
    key: FlowKey,
    count: u32,
    flag: bool,
}

#[derive(Clone, Debug)]
pub struct ElasticSketch {
    config: ElasticConfig,
    family: HashFamily,
    heavy: Vec<Vec<HeavyCell>>,
    light: CountMinRow,
    tally: OpTally,
}

impl ElasticSketch {
    pub fn new(config: ElasticConfig) -> Result<Self> {
        if config.heavy_stages == 0 || config.cells_per_stage == 0 || config.light_cells == 0 {
            return Err(Error::config("elastic sketch needs non-empty heavy and light parts"));
        }
        if config.lambda.is_nan() || config.lambda <= 0.0 {
            return Err(Error::config(format!("lambda {} must be positive", config.lambda)));
        }
        if !(1..=32).contains(&config.light_width) {
            return Err(Error::config("light counter width outside 1..=32"));
        }
        // One member per heavy stage, then one for the light row.
        let family = HashFamily::new(config.seed, config.heavy_stages + 1)?;
        Ok(ElasticSketch {
            heavy: vec![vec![HeavyCell::default(); config.cells_per_stage]; config.heavy_stages],
            light: CountMinRow::new(config.light_cells, config.light_width),
            family,
            config,
            tally: OpTally::default(),
        })
    }

    pub fn config(&self) -> &ElasticConfig {
        &self.config
    }

    pub fn heavy_stage(&self, k: usize) -> &[HeavyCell] {
        &self.heavy[k]
    }

    pub fn light(&self) -> &CountMinRow {
        &self.light
    }

    #[inline]
    fn light_member(&self) -> usize {
        self.config.heavy_stages + 1
    }

    #[inline]
    fn slot(&self, stage: usize, key: &FlowKey) -> usize {
        self.family.index(stage + 1, key, self.config.cells_per_stage)
    }

    pub fn update(&mut self, key: &FlowKey) {
        let mut item = Carried {
            key: *key,
            count: 1,
            flag: false,
        };
        for stage in 0..self.config.heavy_stages {
            let idx = self.slot(stage, &item.key);
            self.tally.hash(1);
            self.tally.mem(2);
            let lambda = self.config.lambda;
            let cell = &mut self.heavy[stage][idx];
            if cell.is_empty() {
                *cell = HeavyCell {
                    key: item.key,
                    vote_pos: item.count,
                    vote_neg: 0,
                    flag: item.flag,
                };
                return;
            }
            if cell.key == item.key {
                cell.vote_pos = cell.vote_pos.saturating_add(item.count);
                return;
            }
            cell.vote_neg = cell.vote_neg.saturating_add(item.count);
            if cell.vote_neg as f64 >= lambda * cell.vote_pos as f64 {
                let evicted = Carried {
                    key: cell.key,
                    count: cell.vote_pos,
                    flag: cell.flag,
                };
                *cell = HeavyCell {
                    key: item.key,
                    vote_pos: item.count,
                    vote_neg: 1,
                    flag: true,
                };
                item = evicted;
            }
        }
        let member = self.light_member();
        let idx = self.light.index(&self.family, member, &item.key);
        self.light.add_at(idx, item.count);
        self.tally.hash(1);
        self.tally.mem(2);
    }

    fn light_estimate(&self, key: &FlowKey) -> u32 {
        self.light.query(&self.family, self.light_member(), key)
    }

    /// Heavy votes of every matching cell, plus the light counter when the
    /// flow is absent from the heavy part or any match carries the flag.
    pub fn query(&self, key: &FlowKey) -> u32 {
        let mut found = false;
        let mut flagged = false;
        let mut heavy = 0u32;
        for stage in 0..self.config.heavy_stages {
            let cell = &self.heavy[stage][self.slot(stage, key)];
            if !cell.is_empty() && cell.key == *key {
                found = true;
                flagged |= cell.flag;
                heavy = heavy.saturating_add(cell.vote_pos);
            }
        }
        if !found {
            self.light_estimate(key)
        } else if flagged {
            heavy.saturating_add(self.light_estimate(key))
        } else {
            heavy
        }
    }

    /// Distinct heavy-part keys with their query estimates.
    pub fn records(&self) -> Vec<FlowRecord> {
        let mut seen = std::collections::HashSet::new();
        self.heavy
            .iter()
            .flatten()
            .filter(|c| !c.is_empty() && seen.insert(c.key))
            .map(|c| FlowRecord::new(c.key, self.query(&c.key)))
            .collect()
    }

    pub fn occupied_heavy_cells(&self) -> usize {
        self.heavy.iter().flatten().filter(|c| !c.is_empty()).count()
    }

    /// Occupied heavy cells plus linear counting over the light row.
    pub fn cardinality(&self) -> CardinalityEstimate {
        let lc = linear_counting(self.light.len(), self.light.zero_cells())
            .expect("zero cells never exceed row length");
        CardinalityEstimate {
            value: self.occupied_heavy_cells() as u64 + lc.value,
            overflow: lc.overflow,
        }
    }
}

impl FlowCollector for ElasticSketch {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Elastic
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
