use std::collections::HashSet;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TraceSource};
use super::metrics::{compute_are, compute_f1, compute_fsc, compute_re, detect_heavy_hitters};
use super::sizing::{size_structures, StructureSizes};
use crate::baselines::{ElasticConfig, ElasticSketch, FlowRadar, FlowRadarConfig, HashPipe};
use crate::error::{Error, Result};
use crate::hashflow::{HashFlow, HashFlowConfig};
use crate::key::FlowKey;
use crate::sketch::{FlowCollector, OpTally};
use crate::traffic::{generate_trace, read_trace, select_flows, GroundTruth, TraceEvent};

/// Per-packet operation counts over a whole run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostSummary {
    pub packets: u64,
    pub total: OpTally,
    pub max_hash_ops: u64,
    pub max_mem_accesses: u64,
}

impl CostSummary {
    pub fn record(&mut self, delta: OpTally) {
        self.packets += 1;
        self.total.hash_ops += delta.hash_ops;
        self.total.mem_accesses += delta.mem_accesses;
        self.max_hash_ops = self.max_hash_ops.max(delta.hash_ops);
        self.max_mem_accesses = self.max_mem_accesses.max(delta.mem_accesses);
    }

    pub fn mean_hash_ops(&self) -> f64 {
        self.total.hash_ops as f64 / self.packets.max(1) as f64
    }

    pub fn mean_mem_accesses(&self) -> f64 {
        self.total.mem_accesses as f64 / self.packets.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeavyHitterMetrics {
    pub threshold: u64,
    pub true_count: usize,
    pub reported_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// ARE over the real heavy hitters; `None` when there are none.
    pub are: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    pub sizes: StructureSizes,
    pub n_flows: usize,
    pub packets: u64,
    pub records_reported: usize,
    pub fsc: f64,
    pub are: f64,
    pub cardinality: u64,
    pub cardinality_overflow: bool,
    pub cardinality_re: f64,
    pub heavy_hitters: Vec<HeavyHitterMetrics>,
    pub cost: CostSummary,
    pub wall_time: Duration,
}

/// One line of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub trace: String,
    pub n_flows: usize,
    pub budget_bytes: u64,
    pub metric: String,
    pub threshold: Option<u64>,
    pub value: String,
    pub seed: u64,
}

/// Seed for the sketch's hash family, kept apart from the trace seed.
pub fn sketch_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5ce7_c4f1_0a11_0c01
}

pub fn build_collector(config: &ExperimentConfig, sizes: StructureSizes) -> Result<Box<dyn FlowCollector>> {
    let seed = sketch_seed(config.seed);
    Ok(match sizes {
        StructureSizes::HashFlow {
            main_buckets,
            ancillary_cells,
        } => Box::new(HashFlow::new(
            HashFlowConfig::new(main_buckets, seed)
                .with_layout(config.layout)
                .with_depth(config.depth)
                .with_ancillary_cells(ancillary_cells),
        )?),
        StructureSizes::HashPipe { total_cells, .. } => Box::new(HashPipe::with_total_cells(total_cells, seed)?),
        StructureSizes::Elastic { heavy_cells, .. } => Box::new(ElasticSketch::new(ElasticConfig::new(heavy_cells, seed))?),
        StructureSizes::FlowRadar { counting_cells, .. } => {
            Box::new(FlowRadar::new(FlowRadarConfig::new(counting_cells, seed))?)
        }
    })
}

/// Builds the packet stream and its ground truth for `config`.
pub fn load_trace(config: &ExperimentConfig) -> Result<(Vec<TraceEvent>, GroundTruth)> {
    if config.flows == 0 {
        return Err(Error::config("flows must be positive"));
    }
    match config.trace.synthetic_spec(config.flows, config.seed) {
        Some(spec) => generate_trace(&spec),
        None => {
            let TraceSource::File { path, .. } = &config.trace else {
                unreachable!()
            };
            let events = read_trace(path)?;
            select_flows(&events, config.flows, config.trace.selection(config.seed))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    let sizes = size_structures(config.algorithm, config.budget_bytes)?;
    let (events, truth) = load_trace(config)?;
    run_on_trace(config, sizes, &events, &truth)
}

/// Feeds `events` through a fresh collector and scores the result.
pub fn run_on_trace(
    config: &ExperimentConfig,
    sizes: StructureSizes,
    events: &[TraceEvent],
    truth: &GroundTruth,
) -> Result<MetricsReport> {
    let started = Instant::now();
    let mut collector = build_collector(config, sizes)?;
    let mut cost = CostSummary::default();
    for e in events {
        let before = collector.tally();
        collector.process(&e.key);
        cost.record(collector.tally().since(&before));
    }

    let snap = collector.snapshot();
    let n_flows = truth.total_flows();
    let fsc = compute_fsc(&snap.records, truth);
    let are = compute_are(&snap.estimator, truth, None)?;
    let card = snap.cardinality;
    let cardinality_re = compute_re(card.value as f64, n_flows)?;

    let mut heavy_hitters = Vec::with_capacity(config.thresholds.len());
    for &threshold in &config.thresholds {
        let reported = detect_heavy_hitters(&snap.records, threshold);
        let score = compute_f1(&reported, truth, threshold);
        let real: HashSet<FlowKey> = truth.heavy_hitters(threshold);
        let are = if real.is_empty() {
            None
        } else {
            Some(compute_are(&snap.estimator, truth, Some(&real))?)
        };
        heavy_hitters.push(HeavyHitterMetrics {
            threshold,
            true_count: real.len(),
            reported_count: reported.len(),
            precision: score.precision,
            recall: score.recall,
            f1: score.f1,
            are,
        });
    }

    Ok(MetricsReport {
        config: config.clone(),
        sizes,
        n_flows,
        packets: truth.total_packets(),
        records_reported: snap.records.len(),
        fsc,
        are,
        cardinality: card.value,
        cardinality_overflow: card.overflow,
        cardinality_re,
        heavy_hitters,
        cost,
        wall_time: started.elapsed(),
    })
}

fn row(config: &ExperimentConfig, metric: &str, threshold: Option<u64>, value: String) -> ResultRow {
    ResultRow {
        algorithm: config.algorithm.name().to_string(),
        trace: config.trace.label(),
        n_flows: config.flows,
        budget_bytes: config.budget_bytes,
        metric: metric.to_string(),
        threshold,
        value,
        seed: config.seed,
    }
}

impl MetricsReport {
    /// The report as CSV rows; wall time is left out so reruns compare equal.
    pub fn rows(&self) -> Vec<ResultRow> {
        let c = &self.config;
        let mut rows = vec![
            row(c, "fsc", None, self.fsc.to_string()),
            row(c, "are", None, self.are.to_string()),
            row(c, "re", None, self.cardinality_re.to_string()),
            row(c, "cardinality", None, self.cardinality.to_string()),
            row(c, "cardinality_overflow", None, self.cardinality_overflow.to_string()),
            row(c, "records", None, self.records_reported.to_string()),
            row(c, "packets", None, self.packets.to_string()),
            row(c, "hash_ops_mean", None, self.cost.mean_hash_ops().to_string()),
            row(c, "hash_ops_max", None, self.cost.max_hash_ops.to_string()),
            row(c, "mem_accesses_mean", None, self.cost.mean_mem_accesses().to_string()),
            row(c, "mem_accesses_max", None, self.cost.max_mem_accesses.to_string()),
        ];
        for hh in &self.heavy_hitters {
            let t = Some(hh.threshold);
            rows.push(row(c, "precision", t, hh.precision.to_string()));
            rows.push(row(c, "recall", t, hh.recall.to_string()));
            rows.push(row(c, "f1", t, hh.f1.to_string()));
            if let Some(are) = hh.are {
                rows.push(row(c, "hh_are", t, are.to_string()));
            }
        }
        rows
    }
}

pub struct GridOutcome {
    pub runs: Vec<(ExperimentConfig, Result<MetricsReport>)>,
    /// Every run's rows, ordered by configuration; failed runs add an
    /// `error` row.
    pub rows: Vec<ResultRow>,
}

impl GridOutcome {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|(_, r)| r.is_err()).count()
    }
}

/// Runs `configs` on `parallelism` worker threads (0 means one per core).
pub fn run_grid(configs: &[ExperimentConfig], parallelism: usize) -> Result<GridOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let mut runs: Vec<(ExperimentConfig, Result<MetricsReport>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| (c.clone(), run_experiment(c)))
            .collect()
    });
    runs.sort_by_cached_key(|(c, _)| c.sort_key());
    let rows = runs
        .iter()
        .flat_map(|(c, r)| match r {
            Ok(report) => report.rows(),
            Err(e) => vec![row(c, "error", None, e.to_string())],
        })
        .collect();
    Ok(GridOutcome { runs, rows })
}

pub fn write_rows<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::TraceSource;
    use crate::sketch::Algorithm;
    use crate::traffic::Preset;

    fn small(algorithm: Algorithm, seed: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(algorithm, 16 << 10, TraceSource::preset(Preset::Backbone), 2000, seed);
        c.thresholds = vec![10, 100];
        c
    }

    #[test]
    fn costs_accumulate() {
        let mut s = CostSummary::default();
        s.record(OpTally { hash_ops: 3, mem_accesses: 5 });
        s.record(OpTally { hash_ops: 1, mem_accesses: 2 });
        assert_eq!((s.packets, s.max_hash_ops, s.max_mem_accesses), (2, 3, 5));
        assert_eq!(s.mean_hash_ops(), 2.0);
        assert_eq!(s.mean_mem_accesses(), 3.5);
    }

    #[test]
    fn every_algorithm_runs() {
        for alg in Algorithm::ALL {
            let r = run_experiment(&small(alg, 1)).unwrap();
            assert_eq!(r.n_flows, 2000);
            assert_eq!(r.cost.packets, r.packets);
            assert!((0.0..=1.0).contains(&r.fsc), "{alg}");
            assert_eq!(r.heavy_hitters.len(), 2);
            assert!(r.rows().iter().all(|row| row.algorithm == alg.name()));
        }
    }

    #[test]
    fn roomy_budget_is_exact_for_hashflow() {
        let mut c = small(Algorithm::HashFlow, 2);
        c.budget_bytes = 1 << 20;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.fsc, 1.0);
        assert_eq!(r.are, 0.0);
        assert!(r.heavy_hitters.iter().all(|h| h.f1 == 1.0));
    }

    #[test]
    fn grid_records_failures_and_is_ordered() {
        let mut configs = vec![small(Algorithm::HashPipe, 1), small(Algorithm::HashFlow, 0)];
        let mut bad = small(Algorithm::FlowRadar, 0);
        bad.budget_bytes = 10;
        configs.push(bad);
        let out = run_grid(&configs, 2).unwrap();
        assert_eq!(out.failures(), 1);
        let algs: Vec<&str> = out.runs.iter().map(|(c, _)| c.algorithm.name()).collect();
        assert_eq!(algs, ["flowradar", "hashflow", "hashpipe"]);
        assert_eq!(out.rows[0].metric, "error");
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let out = run_grid(&[small(Algorithm::Elastic, 3)], 1).unwrap();
        let mut buf = Vec::new();
        write_rows(&mut buf, &out.rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("algorithm,trace,n_flows,budget_bytes,metric,threshold,value,seed\n"));
        assert_eq!(read_rows(buf.as_slice()).unwrap(), out.rows);
    }
}
