//! Sparse voxel tensors, canonical ordering and kernel-offset arithmetic.

mod coord;
pub mod io;
mod kernel;
mod sparse;

use thiserror::Error;

pub use coord::{canonical_sort, CoordSet, GridShape, VoxelCoord};
pub use kernel::{half_offsets, kernel_offsets, ConvVariant, KernelOffset, KernelSpec};
pub use sparse::{derive_output_coords, source_coord, SparseTensor};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("duplicate voxel at {0}")]
    DuplicateVoxel(VoxelCoord),
    #[error("coordinates not in canonical (z, y, x) order at {at}")]
    NotCanonical { at: VoxelCoord },
    #[error("voxel {coord} lies outside grid {shape}")]
    OutOfBounds { coord: VoxelCoord, shape: GridShape },
    #[error("invalid grid shape {nx}x{ny}x{nz}")]
    InvalidShape { nx: u32, ny: u32, nz: u32 },
    #[error("invalid kernel: size {size}, stride {stride}, variant {variant}")]
    InvalidKernel { size: u32, stride: u32, variant: ConvVariant },
    #[error("kernel size {size} has no central symmetry")]
    UnsupportedSymmetry { size: u32 },
    #[error("operation not defined for {0} kernels")]
    UnsupportedVariant(ConvVariant),
    #[error("feature matrix holds {got} values, expected {expected}")]
    FeatureRows { expected: usize, got: usize },
    #[error("tensors need at least one channel")]
    ZeroChannels,
    #[error("transposed convolution requires the saved target coordinates")]
    MissingTargets,
    #[error("malformed tensor encoding: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that exposes a canonical coordinate stream on a grid.
pub trait VoxelSource {
    fn shape(&self) -> GridShape;
    fn coords(&self) -> &[VoxelCoord];

    fn len(&self) -> usize {
        self.coords().len()
    }

    fn is_empty(&self) -> bool {
        self.coords().is_empty()
    }
}

impl VoxelSource for CoordSet {
    fn shape(&self) -> GridShape {
        CoordSet::shape(self)
    }
    fn coords(&self) -> &[VoxelCoord] {
        CoordSet::coords(self)
    }
}

impl VoxelSource for SparseTensor {
    fn shape(&self) -> GridShape {
        SparseTensor::shape(self)
    }
    fn coords(&self) -> &[VoxelCoord] {
        SparseTensor::coords(self)
    }
}
