//! Benchmark harness: memory-parity sizing, metrics, experiment runs and
//! result aggregation.

pub mod config;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod sizing;

pub use config::{parse_bytes, ExperimentConfig, GridSpec, SelectionMode, TraceSource, DEFAULT_THRESHOLDS, SEED_ENV};
pub use metrics::{compute_are, compute_f1, compute_fsc, compute_re, detect_heavy_hitters, F1Score};
pub use report::{aggregate, write_series, Figure, SeriesPoint};
pub use runner::{
    build_collector, load_trace, read_rows, sketch_seed, run_experiment, run_grid, run_on_trace, write_rows, CostSummary,
    GridOutcome, HeavyHitterMetrics, MetricsReport, ResultRow,
};
pub use sizing::{minimum_budget_bytes, size_structures, StructureSizes};
