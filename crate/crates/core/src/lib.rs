//! Sparse voxel map search, sparse convolution and compute-in-memory cost models.

pub mod cimmodel;
pub mod mapsearch;
pub mod pipeline;
pub mod spconv;
pub mod tensor;
pub mod toolkit;
