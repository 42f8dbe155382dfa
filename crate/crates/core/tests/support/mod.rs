//! Brute-force reference models shared by the integration tests.
//!
//! Each reference re-derives a collector from its update rule using plain
//! vectors and options. Only the hash family is shared with the library, so
//! that both sides probe the same buckets.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use flowsketch::bench::StructureSizes;
use flowsketch::hash::HashFamily;
use flowsketch::traffic::{GroundTruth, TraceEvent};
use flowsketch::{FlowKey, FlowRecord, Layout};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn lc(w: usize, z: usize) -> (u64, bool) {
    let w = w as f64;
    if z == 0 {
        ((w * w.ln()).round() as u64, true)
    } else {
        ((w * (w / z as f64).ln()).round() as u64, false)
    }
}

pub struct RefHashFlow {
    family: HashFamily,
    stages: Vec<(usize, usize)>,
    main: Vec<Option<(FlowKey, u32)>>,
    anc: Vec<(u32, u32)>,
    counter_max: u32,
    digest_mask: u64,
    /// Flows that gained or lost a main-table record through promotion.
    pub disturbed: HashSet<FlowKey>,
}

impl RefHashFlow {
    pub fn new(main: usize, ancillary: usize, depth: usize, layout: Layout, seed: u64) -> Self {
        let stages = match layout {
            Layout::MultiHash => vec![(0, main); depth],
            Layout::Pipelined { alpha } => {
                let first = (1.0 - alpha) / (1.0 - alpha.powi(depth as i32)) * main as f64;
                let mut lens: Vec<usize> = (0..depth)
                    .map(|k| ((first * alpha.powi(k as i32)).floor() as usize).max(1))
                    .collect();
                lens[0] = main - lens[1..].iter().sum::<usize>();
                let mut start = 0;
                lens.iter()
                    .map(|&l| {
                        start += l;
                        (start - l, l)
                    })
                    .collect()
            }
        };
        RefHashFlow {
            family: HashFamily::new(seed, depth + 1).unwrap(),
            stages,
            main: vec![None; main],
            anc: vec![(0, 0); ancillary],
            counter_max: 255,
            digest_mask: 255,
            disturbed: HashSet::new(),
        }
    }

    fn positions(&self, key: &FlowKey) -> Vec<usize> {
        self.stages
            .iter()
            .enumerate()
            .map(|(j, &(start, len))| start + self.family.index(j + 1, key, len))
            .collect()
    }

    fn anc_slot(&self, key: &FlowKey) -> (usize, u32) {
        let idx = self.family.index(self.stages.len() + 1, key, self.anc.len());
        (idx, (self.family.hash64(1, key) & self.digest_mask) as u32)
    }

    pub fn update(&mut self, key: &FlowKey) {
        let mut sentinel: Option<(usize, u32)> = None;
        for pos in self.positions(key) {
            match &mut self.main[pos] {
                None => {
                    self.main[pos] = Some((*key, 1));
                    return;
                }
                Some((k, c)) if k == key => {
                    *c += 1;
                    return;
                }
                Some((_, c)) => {
                    if sentinel.is_none_or(|(_, m)| *c < m) {
                        sentinel = Some((pos, *c));
                    }
                }
            }
        }
        let (pos, min) = sentinel.unwrap();
        let (idx, digest) = self.anc_slot(key);
        let (d, c) = self.anc[idx];
        if c == 0 || d != digest {
            self.anc[idx] = (digest, 1);
        } else if c < min {
            self.anc[idx] = (digest, (c + 1).min(self.counter_max));
        } else {
            if let Some((evicted, _)) = self.main[pos] {
                self.disturbed.insert(evicted);
            }
            self.main[pos] = Some((*key, c + 1));
            self.anc[idx] = (0, 0);
            self.disturbed.insert(*key);
        }
    }

    pub fn query(&self, key: &FlowKey) -> u32 {
        for pos in self.positions(key) {
            if let Some((k, c)) = self.main[pos] {
                if k == *key {
                    return c;
                }
            }
        }
        let (idx, digest) = self.anc_slot(key);
        match self.anc[idx] {
            (d, c) if c > 0 && d == digest => c,
            _ => 0,
        }
    }

    pub fn records(&self) -> Vec<FlowRecord> {
        self.main.iter().flatten().map(|&(k, c)| FlowRecord::new(k, c)).collect()
    }

    pub fn cardinality(&self) -> (u64, bool) {
        let z = self.anc.iter().filter(|c| c.1 == 0).count();
        let (v, o) = lc(self.anc.len(), z);
        (self.main.iter().flatten().count() as u64 + v, o)
    }
}

pub struct RefHashPipe {
    family: HashFamily,
    stages: Vec<Vec<Option<(FlowKey, u32)>>>,
    pub discarded_packets: u64,
}

impl RefHashPipe {
    pub fn new(stages: usize, per_stage: usize, seed: u64) -> Self {
        RefHashPipe {
            family: HashFamily::new(seed, stages).unwrap(),
            stages: vec![vec![None; per_stage]; stages],
            discarded_packets: 0,
        }
    }

    fn slot(&self, s: usize, key: &FlowKey) -> usize {
        self.family.index(s + 1, key, self.stages[s].len())
    }

    pub fn update(&mut self, key: &FlowKey) {
        let i = self.slot(0, key);
        let mut carried = match self.stages[0][i] {
            None => {
                self.stages[0][i] = Some((*key, 1));
                return;
            }
            Some((k, c)) if k == *key => {
                self.stages[0][i] = Some((k, c + 1));
                return;
            }
            Some(other) => {
                self.stages[0][i] = Some((*key, 1));
                other
            }
        };
        for s in 1..self.stages.len() {
            let j = self.slot(s, &carried.0);
            match self.stages[s][j] {
                None => {
                    self.stages[s][j] = Some(carried);
                    return;
                }
                Some((k, c)) if k == carried.0 => {
                    self.stages[s][j] = Some((k, c + carried.1));
                    return;
                }
                Some(resident) if resident.1 < carried.1 => {
                    self.stages[s][j] = Some(carried);
                    carried = resident;
                }
                Some(_) => {}
            }
        }
        self.discarded_packets += carried.1 as u64;
    }

    pub fn query(&self, key: &FlowKey) -> u32 {
        (0..self.stages.len())
            .filter_map(|s| self.stages[s][self.slot(s, key)])
            .filter(|(k, _)| k == key)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn records(&self) -> Vec<FlowRecord> {
        self.stages.iter().flatten().flatten().map(|&(k, c)| FlowRecord::new(k, c)).collect()
    }

    pub fn cardinality(&self) -> (u64, bool) {
        (self.stages.iter().flatten().flatten().count() as u64, false)
    }
}

#[derive(Clone, Copy)]
struct RefHeavy {
    key: FlowKey,
    pos: u32,
    neg: u32,
    flag: bool,
}

pub struct RefElastic {
    family: HashFamily,
    heavy: Vec<Vec<Option<RefHeavy>>>,
    light: Vec<u32>,
}

impl RefElastic {
    pub fn new(heavy_cells: usize, seed: u64) -> Self {
        RefElastic {
            family: HashFamily::new(seed, 4).unwrap(),
            heavy: vec![vec![None; heavy_cells / 3]; 3],
            light: vec![0; heavy_cells],
        }
    }

    fn slot(&self, s: usize, key: &FlowKey) -> usize {
        self.family.index(s + 1, key, self.heavy[s].len())
    }

    fn light_slot(&self, key: &FlowKey) -> usize {
        self.family.index(4, key, self.light.len())
    }

    pub fn update(&mut self, key: &FlowKey) {
        let (mut k, mut count, mut flag) = (*key, 1u32, false);
        for s in 0..3 {
            let i = self.slot(s, &k);
            match &mut self.heavy[s][i] {
                None => {
                    self.heavy[s][i] = Some(RefHeavy { key: k, pos: count, neg: 0, flag });
                    return;
                }
                Some(cell) if cell.key == k => {
                    cell.pos += count;
                    return;
                }
                Some(cell) => {
                    cell.neg += count;
                    if cell.neg as f64 >= 8.0 * cell.pos as f64 {
                        let out = *cell;
                        *cell = RefHeavy { key: k, pos: count, neg: 1, flag: true };
                        (k, count, flag) = (out.key, out.pos, out.flag);
                    }
                }
            }
        }
        let j = self.light_slot(&k);
        self.light[j] = (self.light[j] + count).min(255);
    }

    pub fn query(&self, key: &FlowKey) -> u32 {
        let hits: Vec<RefHeavy> = (0..3)
            .filter_map(|s| self.heavy[s][self.slot(s, key)])
            .filter(|c| c.key == *key)
            .collect();
        let light = self.light[self.light_slot(key)];
        if hits.is_empty() {
            light
        } else {
            let heavy: u32 = hits.iter().map(|c| c.pos).sum();
            if hits.iter().any(|c| c.flag) {
                heavy + light
            } else {
                heavy
            }
        }
    }

    pub fn records(&self) -> Vec<FlowRecord> {
        let keys: HashSet<FlowKey> = self.heavy.iter().flatten().flatten().map(|c| c.key).collect();
        keys.into_iter().map(|k| FlowRecord::new(k, self.query(&k))).collect()
    }

    pub fn cardinality(&self) -> (u64, bool) {
        let occupied = self.heavy.iter().flatten().flatten().count() as u64;
        let (v, o) = lc(self.light.len(), self.light.iter().filter(|&&c| c == 0).count());
        (occupied + v, o)
    }
}

pub struct RefFlowRadar {
    family: HashFamily,
    bloom: Vec<bool>,
    segments: Vec<(usize, usize)>,
    /// (xor of IDs, flow count, packet count)
    cells: Vec<(u128, u32, u32)>,
    seen: HashSet<FlowKey>,
    /// A new flow whose bloom bits were all already set.
    pub false_positive: bool,
}

impl RefFlowRadar {
    pub fn new(cells: usize, seed: u64) -> Self {
        RefFlowRadar {
            family: HashFamily::new(seed, 7).unwrap(),
            bloom: vec![false; 40 * cells],
            segments: (0..3).map(|j| (cells * j / 3, cells * (j + 1) / 3 - cells * j / 3)).collect(),
            cells: vec![(0, 0, 0); cells],
            seen: HashSet::new(),
            false_positive: false,
        }
    }

    fn cell_ids(&self, key: &FlowKey) -> Vec<usize> {
        self.segments
            .iter()
            .enumerate()
            .map(|(j, &(start, len))| start + self.family.index(5 + j, key, len))
            .collect()
    }

    pub fn update(&mut self, key: &FlowKey) {
        let mut fresh = false;
        for j in 0..4 {
            let b = self.family.index(1 + j, key, self.bloom.len());
            fresh |= !self.bloom[b];
            self.bloom[b] = true;
        }
        if self.seen.insert(*key) && !fresh {
            self.false_positive = true;
        }
        for i in self.cell_ids(key) {
            let c = &mut self.cells[i];
            if fresh {
                c.0 ^= key.to_u128();
                c.1 += 1;
            }
            c.2 = c.2.wrapping_add(1);
        }
    }

    /// Peeling by repeated full scans. Returns the records and whether every
    /// cell emptied.
    pub fn decode(&self) -> (Vec<FlowRecord>, bool) {
        let mut cells = self.cells.clone();
        let mut out = Vec::new();
        while let Some(i) = (0..cells.len()).find(|&i| cells[i].1 == 1) {
            let key = FlowKey::from_u128(cells[i].0);
            let packets = cells[i].2;
            out.push(FlowRecord::new(key, packets));
            for j in self.cell_ids(&key) {
                cells[j].0 ^= key.to_u128();
                cells[j].1 = cells[j].1.wrapping_sub(1);
                cells[j].2 = cells[j].2.wrapping_sub(packets);
            }
        }
        let full = cells.iter().all(|c| c.1 == 0);
        (out, full)
    }

    pub fn cardinality(&self) -> (u64, bool) {
        let w = self.bloom.len() as f64;
        let z = self.bloom.iter().filter(|b| !**b).count();
        if z == 0 {
            ((w * w.ln() / 4.0).round() as u64, true)
        } else {
            ((w * (w / z as f64).ln() / 4.0).round() as u64, false)
        }
    }
}

/// Any of the four references behind one interface.
pub enum Reference {
    HashFlow(RefHashFlow),
    HashPipe(RefHashPipe),
    Elastic(RefElastic),
    FlowRadar(RefFlowRadar),
}

/// What a reference reports at the end of a trace.
pub struct RefReport {
    pub records: Vec<FlowRecord>,
    pub estimates: HashMap<FlowKey, u32>,
    pub cardinality: (u64, bool),
}

impl Reference {
    pub fn new(sizes: StructureSizes, layout: Layout, depth: usize, seed: u64) -> Self {
        match sizes {
            StructureSizes::HashFlow { main_buckets, ancillary_cells } => {
                Reference::HashFlow(RefHashFlow::new(main_buckets, ancillary_cells, depth, layout, seed))
            }
            StructureSizes::HashPipe { total_cells, .. } => Reference::HashPipe(RefHashPipe::new(4, total_cells / 4, seed)),
            StructureSizes::Elastic { heavy_cells, .. } => Reference::Elastic(RefElastic::new(heavy_cells, seed)),
            StructureSizes::FlowRadar { counting_cells, .. } => Reference::FlowRadar(RefFlowRadar::new(counting_cells, seed)),
        }
    }

    pub fn update(&mut self, key: &FlowKey) {
        match self {
            Reference::HashFlow(r) => r.update(key),
            Reference::HashPipe(r) => r.update(key),
            Reference::Elastic(r) => r.update(key),
            Reference::FlowRadar(r) => r.update(key),
        }
    }

    /// Records, per-flow estimates for `keys`, and the cardinality estimate.
    pub fn report<'a>(&self, keys: impl IntoIterator<Item = &'a FlowKey>) -> RefReport {
        let (records, cardinality) = match self {
            Reference::HashFlow(r) => (r.records(), r.cardinality()),
            Reference::HashPipe(r) => (r.records(), r.cardinality()),
            Reference::Elastic(r) => (r.records(), r.cardinality()),
            Reference::FlowRadar(r) => (r.decode().0, r.cardinality()),
        };
        let decoded: HashMap<FlowKey, u32> = records.iter().map(|r| (r.key, r.count)).collect();
        let estimates = keys
            .into_iter()
            .map(|k| {
                let v = match self {
                    Reference::HashFlow(r) => r.query(k),
                    Reference::HashPipe(r) => r.query(k),
                    Reference::Elastic(r) => r.query(k),
                    Reference::FlowRadar(_) => decoded.get(k).copied().unwrap_or(0),
                };
                (*k, v)
            })
            .collect();
        RefReport {
            records,
            estimates,
            cardinality,
        }
    }
}

/// Metrics recomputed from their definitions.
pub struct RefMetrics {
    pub fsc: f64,
    pub are: f64,
    pub re: f64,
    /// (threshold, precision, recall, f1, heavy-hitter ARE)
    pub heavy: Vec<(u64, f64, f64, f64, Option<f64>)>,
}

pub fn reference_metrics(report: &RefReport, truth: &GroundTruth, thresholds: &[u64]) -> RefMetrics {
    let sizes: HashMap<FlowKey, u64> = truth.iter().map(|(k, s)| (*k, s)).collect();
    let n = sizes.len() as f64;
    let reported_keys: HashSet<FlowKey> = report.records.iter().map(|r| r.key).collect();
    let fsc = reported_keys.iter().filter(|k| sizes.contains_key(k)).count() as f64 / n;
    let rel = |k: &FlowKey| (report.estimates[k] as f64 - sizes[k] as f64).abs() / sizes[k] as f64;
    let are = sizes.keys().map(rel).sum::<f64>() / n;
    let re = (report.cardinality.0 as f64 - n).abs() / n;
    let heavy = thresholds
        .iter()
        .map(|&t| {
            let reported: HashSet<FlowKey> =
                report.records.iter().filter(|r| r.count as u64 > t).map(|r| r.key).collect();
            let real: HashSet<FlowKey> = sizes.iter().filter(|(_, &s)| s > t).map(|(k, _)| *k).collect();
            let both = reported.iter().filter(|k| real.contains(k)).count() as f64;
            let pr = if reported.is_empty() {
                if real.is_empty() { 1.0 } else { 0.0 }
            } else {
                both / reported.len() as f64
            };
            let rr = if real.is_empty() { 1.0 } else { both / real.len() as f64 };
            let f1 = if pr + rr == 0.0 { 0.0 } else { 2.0 * pr * rr / (pr + rr) };
            let hh_are = (!real.is_empty()).then(|| real.iter().map(rel).sum::<f64>() / real.len() as f64);
            (t, pr, rr, f1, hh_are)
        })
        .collect();
    RefMetrics { fsc, are, re, heavy }
}

/// A random trace of at most `max_flows` flows and `max_packets` packets
/// with heavy-tailed sizes, shuffled or flow-by-flow.
pub fn mini_trace(rng: &mut ChaCha8Rng, max_flows: usize, max_packets: usize) -> (Vec<TraceEvent>, GroundTruth) {
    let flows = rng.gen_range(1..=max_flows);
    let tail = rng.gen_range(0.8..2.0);
    let mut keys = HashSet::new();
    let mut events = Vec::new();
    while keys.len() < flows {
        let key = FlowKey::new(rng.gen(), rng.gen(), rng.gen(), rng.gen(), rng.gen());
        let size = (rng.gen::<f64>().max(1e-9).powf(-1.0 / tail) as usize).clamp(1, 5000);
        if events.len() + size > max_packets {
            break;
        }
        if keys.insert(key) {
            events.extend(std::iter::repeat_n(TraceEvent { timestamp: 0, key }, size));
        }
    }
    if rng.gen_bool(0.8) {
        events.shuffle(rng);
    }
    for (i, e) in events.iter_mut().enumerate() {
        e.timestamp = i as u64;
    }
    let truth = GroundTruth::from_events(&events);
    (events, truth)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
