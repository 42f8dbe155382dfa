use std::ops::Range;

use crate::error::{Error, Result};
use crate::hash::Digest;
use crate::key::{FlowKey, FlowRecord};

/// How the main table's `n` buckets are addressed by the `d` probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layout {
    /// Every probe addresses the same array of `n` buckets.
    MultiHash,
    /// Probe `k` addresses its own stage; stage sizes shrink by `alpha`.
    Pipelined { alpha: f64 },
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Layout::MultiHash => "multihash",
            Layout::Pipelined { .. } => "pipelined",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Layout::MultiHash => None,
            Layout::Pipelined { alpha } => Some(*alpha),
        }
    }
}

/// Geometric stage split `n_k = alpha^(k-1) (1-alpha)/(1-alpha^d) n`.
///
/// Each stage gets the floor of its target and the remainder goes to stage 1.
/// A stage whose floor is zero is raised to one bucket, taken from stage 1.
pub fn pipelined_stage_sizes(total: usize, depth: usize, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("pipeline weight {alpha} outside (0, 1)")));
    }
    if depth == 0 || total < depth {
        return Err(Error::config(format!(
            "main table needs at least depth ({depth}) buckets, got {total}"
        )));
    }
    let first = (1.0 - alpha) / (1.0 - alpha.powi(depth as i32)) * total as f64;
    let mut sizes: Vec<usize> = (0..depth)
        .map(|k| ((first * alpha.powi(k as i32)).floor() as usize).max(1))
        .collect();
    let assigned: usize = sizes[1..].iter().sum();
    sizes[0] = total - assigned;
    Ok(sizes)
}

#[derive(Clone, Debug)]
pub struct MainTable {
    buckets: Vec<FlowRecord>,
    /// Address range of each probe; identical ranges for the multi-hash layout.
    stages: Vec<Range<usize>>,
    occupied: usize,
}

impl MainTable {
    pub fn new(total: usize, depth: usize, layout: Layout) -> Result<Self> {
        if depth == 0 {
            return Err(Error::config("depth must be at least 1"));
        }
        if total < depth {
            return Err(Error::config(format!(
                "main table needs at least depth ({depth}) buckets, got {total}"
            )));
        }
        let stages = match layout {
            Layout::MultiHash => vec![0..total; depth],
            Layout::Pipelined { alpha } => {
                let mut start = 0;
                pipelined_stage_sizes(total, depth, alpha)?
                    .into_iter()
                    .map(|len| {
                        let r = start..start + len;
                        start += len;
                        r
                    })
                    .collect()
            }
        };
        Ok(MainTable {
            buckets: vec![FlowRecord::EMPTY; total],
            stages,
            occupied: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Bucket count addressed by each probe.
    pub fn stage_sizes(&self) -> Vec<usize> {
        self.stages.iter().map(|r| r.len()).collect()
    }

    #[inline]
    pub(crate) fn stage(&self, probe: usize) -> &Range<usize> {
        &self.stages[probe]
    }

    /// Number of stage `probe` belongs to, for a global bucket position.
    pub fn stage_of(&self, position: usize) -> usize {
        self.stages
            .iter()
            .position(|r| r.contains(&position))
            .unwrap_or(0)
    }

    #[inline]
    pub fn bucket(&self, position: usize) -> &FlowRecord {
        &self.buckets[position]
    }

    #[inline]
    pub(crate) fn bucket_mut(&mut self, position: usize) -> &mut FlowRecord {
        &mut self.buckets[position]
    }

    #[inline]
    pub(crate) fn install(&mut self, position: usize, record: FlowRecord) {
        debug_assert!(record.count > 0);
        if self.buckets[position].is_empty() {
            self.occupied += 1;
        }
        self.buckets[position] = record;
    }

    pub fn occupied(&self) -> usize {
        self.occupied
    }

    pub fn records(&self) -> impl Iterator<Item = &FlowRecord> {
        self.buckets.iter().filter(|r| !r.is_empty())
    }
}

/// One ancillary cell: a digest and a small saturating counter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AncillaryCell {
    pub digest: Digest,
    pub count: u32,
}

#[derive(Clone, Debug)]
pub struct AncillaryTable {
    cells: Vec<AncillaryCell>,
    counter_max: u32,
    empty: usize,
}

impl AncillaryTable {
    pub fn new(size: usize, counter_width: u32) -> Result<Self> {
        if size == 0 {
            return Err(Error::config("ancillary table needs at least one cell"));
        }
        if !(1..=32).contains(&counter_width) {
            return Err(Error::config(format!(
                "ancillary counter width {counter_width} outside 1..=32"
            )));
        }
        Ok(AncillaryTable {
            cells: vec![AncillaryCell::default(); size],
            counter_max: (((1u64) << counter_width) - 1) as u32,
            empty: size,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn counter_max(&self) -> u32 {
        self.counter_max
    }

    pub fn empty_cells(&self) -> usize {
        self.empty
    }

    #[inline]
    pub fn cell(&self, idx: usize) -> AncillaryCell {
        self.cells[idx]
    }

    #[inline]
    pub(crate) fn set(&mut self, idx: usize, digest: Digest, count: u32) {
        let was_empty = self.cells[idx].count == 0;
        let count = count.min(self.counter_max);
        match (was_empty, count == 0) {
            (true, false) => self.empty -= 1,
            (false, true) => self.empty += 1,
            _ => {}
        }
        self.cells[idx] = AncillaryCell { digest, count };
    }

    #[inline]
    pub(crate) fn clear(&mut self, idx: usize) {
        self.set(idx, Digest::default(), 0);
    }

    pub fn cells(&self) -> &[AncillaryCell] {
        &self.cells
    }
}

/// Lookup helper shared by update and query.
#[inline]
pub(crate) fn matches(record: &FlowRecord, key: &FlowKey) -> bool {
    record.count > 0 && record.key == *key
}
