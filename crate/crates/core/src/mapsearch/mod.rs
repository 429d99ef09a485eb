//! IN-OUT map search: a hash oracle and four streaming searches that also
//! report off-chip coordinate traffic under a bounded buffer model.

mod doms;
mod map;
mod oracle;
mod output_major;
mod sorter;
mod stats;
mod table;
mod weight_major;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{GridShape, KernelSpec, TensorError, VoxelSource};

pub use doms::{block_doms_search, doms_search};
pub use map::{expand_symmetric, InOutMap, MapEntry};
pub use oracle::oracle_search;
pub use output_major::output_major_search;
pub use sorter::{bitonic_sort, MergeSorter};
pub use stats::{AccessStats, BufferConfig};
pub use table::{block_streams, build_depth_table, BlockPartition, DepthEncodingTable, DepthEntry};
pub use weight_major::weight_major_search;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("duplicate map entry {0:?}")]
    DuplicateEntry(MapEntry),
    #[error("search method does not support kernel {0}")]
    UnsupportedKernel(KernelSpec),
    #[error("invalid buffer configuration: {0}")]
    InvalidBuffer(String),
    #[error("block grid ({m}, {n}) does not fit grid {shape}")]
    InvalidPartition { m: usize, n: usize, shape: GridShape },
    #[error("depth-encoding table does not match the input stream")]
    TableMismatch,
    #[error("output coordinates must equal the input coordinates for submanifold search")]
    OutputMismatch,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// The searches selectable by name from configs and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Oracle,
    WeightMajor,
    OutputMajor,
    Doms,
    BlockDoms,
}

impl SearchMethod {
    pub const ALL: [SearchMethod; 5] = [
        SearchMethod::Oracle,
        SearchMethod::WeightMajor,
        SearchMethod::OutputMajor,
        SearchMethod::Doms,
        SearchMethod::BlockDoms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SearchMethod::Oracle => "oracle",
            SearchMethod::WeightMajor => "weight_major",
            SearchMethod::OutputMajor => "output_major",
            SearchMethod::Doms => "doms",
            SearchMethod::BlockDoms => "block_doms",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SearchMethod::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown search method `{s}`"))
    }
}

/// Result of [`run_search`]. The oracle has no traffic trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub method: SearchMethod,
    pub map: InOutMap,
    pub stats: Option<AccessStats>,
}

/// Runs `method` and returns the full map. `block_grid` is only read by block-DOMS.
pub fn run_search(
    method: SearchMethod,
    input: &impl VoxelSource,
    outputs: &impl VoxelSource,
    spec: &KernelSpec,
    buf: &BufferConfig,
    block_grid: (usize, usize),
) -> Result<SearchOutcome, SearchError> {
    let (map, stats) = match method {
        SearchMethod::Oracle => (oracle_search(input, outputs, spec), None),
        SearchMethod::WeightMajor => {
            let (m, s) = weight_major_search(input, outputs, spec, buf)?;
            (m, Some(s))
        }
        SearchMethod::OutputMajor => {
            let (m, s) = output_major_search(input, outputs, spec, buf)?;
            (m, Some(s))
        }
        SearchMethod::Doms => {
            let table = build_depth_table(input, (1, 1))?;
            let (m, s) = doms_search(input, outputs, spec, buf, &table)?;
            (m, Some(s))
        }
        SearchMethod::BlockDoms => {
            let (m, s) = block_doms_search(input, outputs, spec, buf, block_grid)?;
            (m, Some(s))
        }
    };
    Ok(SearchOutcome { method, map, stats })
}

/// Submanifold searches need `outputs == inputs`.
pub(crate) fn check_same_coords(input: &impl VoxelSource, outputs: &impl VoxelSource) -> Result<(), SearchError> {
    if input.shape() != outputs.shape() || input.coords() != outputs.coords() {
        return Err(SearchError::OutputMismatch);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in SearchMethod::ALL {
            assert_eq!(m.name().parse::<SearchMethod>().unwrap(), m);
        }
        assert!("hash_probe".parse::<SearchMethod>().is_err());
    }
}
