//! Flow-record collection sketches for per-flow measurement.
//!
//! [`HashFlow`] keeps exact records for as many flows as its main table can
//! hold and summarizes the rest in a compact ancillary table. The crate also
//! ships the HashPipe, ElasticSketch and FlowRadar baselines, an analytical
//! model of main-table utilization, synthetic and file-based traces, and a
//! harness that compares the collectors under equal memory.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod hash;
pub mod hashflow;
pub mod key;
pub mod model;
pub mod sketch;
pub mod traffic;

pub use error::{Error, Result};
pub use hashflow::{HashFlow, HashFlowConfig, Layout};
pub use key::{FlowKey, FlowRecord};
pub use sketch::{Algorithm, FlowCollector, OpTally, Snapshot};
