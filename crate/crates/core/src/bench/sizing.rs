//! Memory-parity sizing: every algorithm gets the same bit budget.
//!
//! Cell costs in bits: a flow record is a 104-bit ID plus a 32-bit counter;
//! a HashFlow ancillary cell is an 8-bit digest plus an 8-bit counter; an
//! ElasticSketch heavy cell is ID + two 32-bit votes + a flag bit and a light
//! counter is 8 bits; a FlowRadar counting cell is ID + flow count + packet
//! count, plus 40 bloom bits per counting cell.

use crate::baselines::flowradar::BLOOM_BITS_PER_CELL;
use crate::error::{Error, Result};
use crate::sketch::Algorithm;

pub const FLOW_ID_BITS: u64 = 104;
pub const RECORD_BITS: u64 = FLOW_ID_BITS + 32;
pub const ANCILLARY_CELL_BITS: u64 = 8 + 8;
pub const ELASTIC_HEAVY_BITS: u64 = FLOW_ID_BITS + 32 + 32 + 1;
pub const ELASTIC_LIGHT_BITS: u64 = 8;
pub const FLOWRADAR_CELL_BITS: u64 = FLOW_ID_BITS + 32 + 32;

pub const HASHPIPE_STAGES: usize = 4;
pub const ELASTIC_HEAVY_STAGES: usize = 3;

/// Smallest cell count accepted for any structure.
const MIN_CELLS: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureSizes {
    HashFlow {
        main_buckets: usize,
        ancillary_cells: usize,
    },
    HashPipe {
        total_cells: usize,
        cells_per_stage: usize,
    },
    Elastic {
        heavy_cells: usize,
        cells_per_stage: usize,
        light_cells: usize,
    },
    FlowRadar {
        counting_cells: usize,
        bloom_bits: usize,
    },
}

/// Bits consumed per allocation unit of `algorithm`.
fn unit_bits(algorithm: Algorithm) -> (u64, u64) {
    match algorithm {
        Algorithm::HashFlow => (RECORD_BITS + ANCILLARY_CELL_BITS, MIN_CELLS),
        Algorithm::HashPipe => (RECORD_BITS, HASHPIPE_STAGES as u64),
        Algorithm::Elastic => (ELASTIC_HEAVY_BITS + ELASTIC_LIGHT_BITS, ELASTIC_HEAVY_STAGES as u64),
        Algorithm::FlowRadar => (FLOWRADAR_CELL_BITS + BLOOM_BITS_PER_CELL as u64, MIN_CELLS),
    }
}

pub fn minimum_budget_bytes(algorithm: Algorithm) -> u64 {
    let (bits, units) = unit_bits(algorithm);
    (bits * units).div_ceil(8)
}

pub fn size_structures(algorithm: Algorithm, budget_bytes: u64) -> Result<StructureSizes> {
    let min = minimum_budget_bytes(algorithm);
    if budget_bytes < min {
        return Err(Error::config(format!(
            "{algorithm} needs at least {min} bytes, budget is {budget_bytes}"
        )));
    }
    let (unit, _) = unit_bits(algorithm);
    let cells = (budget_bytes * 8 / unit) as usize;
    Ok(match algorithm {
        Algorithm::HashFlow => StructureSizes::HashFlow {
            main_buckets: cells,
            ancillary_cells: cells,
        },
        Algorithm::HashPipe => StructureSizes::HashPipe {
            total_cells: cells,
            cells_per_stage: cells / HASHPIPE_STAGES,
        },
        Algorithm::Elastic => StructureSizes::Elastic {
            heavy_cells: cells,
            cells_per_stage: cells / ELASTIC_HEAVY_STAGES,
            light_cells: cells,
        },
        Algorithm::FlowRadar => StructureSizes::FlowRadar {
            counting_cells: cells,
            bloom_bits: cells * BLOOM_BITS_PER_CELL,
        },
    })
}

impl StructureSizes {
    /// Upper bound on full-ID records the structure can hold at once.
    pub fn record_capacity(&self) -> usize {
        match *self {
            StructureSizes::HashFlow { main_buckets, .. } => main_buckets,
            StructureSizes::HashPipe { cells_per_stage, .. } => cells_per_stage * HASHPIPE_STAGES,
            StructureSizes::Elastic { cells_per_stage, .. } => cells_per_stage * ELASTIC_HEAVY_STAGES,
            StructureSizes::FlowRadar { counting_cells, .. } => counting_cells,
        }
    }

    pub fn bits_used(&self) -> u64 {
        match *self {
            StructureSizes::HashFlow {
                main_buckets,
                ancillary_cells,
            } => main_buckets as u64 * RECORD_BITS + ancillary_cells as u64 * ANCILLARY_CELL_BITS,
            StructureSizes::HashPipe { cells_per_stage, .. } => {
                (cells_per_stage * HASHPIPE_STAGES) as u64 * RECORD_BITS
            }
            StructureSizes::Elastic {
                cells_per_stage,
                light_cells,
                ..
            } => {
                (cells_per_stage * ELASTIC_HEAVY_STAGES) as u64 * ELASTIC_HEAVY_BITS
                    + light_cells as u64 * ELASTIC_LIGHT_BITS
            }
            StructureSizes::FlowRadar {
                counting_cells,
                bloom_bits,
            } => counting_cells as u64 * FLOWRADAR_CELL_BITS + bloom_bits as u64,
        }
    }
}
