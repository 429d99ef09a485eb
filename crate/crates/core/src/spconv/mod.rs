//! Sparse convolution from IN-OUT maps, with a dense reference.

mod chain;
mod dense;
mod exec;
pub mod io;
mod weights;

use thiserror::Error;

use crate::mapsearch::{MapEntry, SearchError};
use crate::tensor::TensorError;

pub use chain::{chain_layers, ChainOptions, ChainOutput, LayerReport};
pub use dense::{dense_oracle, DenseVolume, DENSE_ORACLE_MAX_VOXELS};
pub use exec::execute_spconv;
pub use weights::{quantize_symmetric, WeightData, WeightTensor};

#[derive(Debug, Error)]
pub enum SpconvError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("map entry {0:?} points outside the tensors or kernel")]
    MapIndex(MapEntry),
    #[error("dense oracle refuses a grid of {volume} voxels")]
    OracleScale { volume: u64 },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
