use crate::hash::HashFamily;
use crate::key::FlowKey;

/// One row of a count-min sketch with saturating counters of `width` bits.
#[derive(Clone, Debug)]
pub struct CountMinRow {
    counters: Vec<u32>,
    max: u32,
    zeros: usize,
}

impl CountMinRow {
    pub fn new(cells: usize, width: u32) -> Self {
        assert!(cells > 0 && (1..=32).contains(&width));
        CountMinRow {
            counters: vec![0; cells],
            max: ((1u64 << width) - 1) as u32,
            zeros: cells,
        }
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn zero_cells(&self) -> usize {
        self.zeros
    }

    pub fn counter_max(&self) -> u32 {
        self.max
    }

    /// Cell index of `key` under `member` of `family`.
    #[inline]
    pub fn index(&self, family: &HashFamily, member: usize, key: &FlowKey) -> usize {
        family.index(member, key, self.counters.len())
    }

    /// Adds `count` to cell `idx`, saturating at the counter maximum.
    #[inline]
    pub fn add_at(&mut self, idx: usize, count: u32) {
        let c = &mut self.counters[idx];
        if *c == 0 && count > 0 {
            self.zeros -= 1;
        }
        *c = c.saturating_add(count).min(self.max);
    }

    #[inline]
    pub fn get(&self, idx: usize) -> u32 {
        self.counters[idx]
    }

    pub fn update(&mut self, family: &HashFamily, member: usize, key: &FlowKey, count: u32) {
        let idx = self.index(family, member, key);
        self.add_at(idx, count);
    }

    pub fn query(&self, family: &HashFamily, member: usize, key: &FlowKey) -> u32 {
        self.get(self.index(family, member, key))
    }
}
