//! Competitor collectors (HashPipe, ElasticSketch, FlowRadar) and the small
//! primitives they share with HashFlow.

pub mod bloom;
pub mod countmin;
pub mod elastic;
pub mod flowradar;
pub mod hashpipe;

pub use bloom::BloomFilter;
pub use countmin::CountMinRow;
pub use elastic::{ElasticConfig, ElasticSketch, HeavyCell};
pub use flowradar::{CountingCell, FlowRadar, FlowRadarConfig, FlowRadarDecode};
pub use hashpipe::HashPipe;

use crate::error::{Error, Result};

/// A flow-count estimate. `overflow` marks a saturated bitmap, in which case
/// `value` is the `w ln w` upper-bound marker rather than an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CardinalityEstimate {
    pub value: u64,
    pub overflow: bool,
}

/// Linear counting `w ln(w / z)` over `w` cells of which `z` are empty,
/// rounded to the nearest integer.
pub fn linear_counting(w: usize, z: usize) -> Result<CardinalityEstimate> {
    if w == 0 {
        return Err(Error::invalid("linear counting over zero cells"));
    }
    if z > w {
        return Err(Error::invalid(format!("{z} empty cells exceed {w} total")));
    }
    let w_f = w as f64;
    Ok(if z == 0 {
        CardinalityEstimate {
            value: (w_f * w_f.ln()).round() as u64,
            overflow: true,
        }
    } else {
        CardinalityEstimate {
            value: (w_f * (w_f / z as f64).ln()).round() as u64,
            overflow: false,
        }
    })
}
