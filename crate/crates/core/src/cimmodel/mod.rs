//! Compute-in-memory core model: weight mapping, workload balancing and cycle counts.

mod cycles;
mod export;
mod geometry;
mod layout;
mod workload;

use thiserror::Error;

pub use cycles::{conv2d_reuse_cycles, spconv_cycles, Batching, Conv2dReport, CycleReport, EventCosts};
pub use export::{histogram_csv, write_histogram_csv, HISTOGRAM_CSV_HEADER};
pub use geometry::CimGeometry;
pub use layout::{layout_submatrix, layout_traditional, CimKernel, CimLayout, MappingScheme, Placement};
pub use workload::{w2b_optimize, workload_histogram, WorkloadHistogram};

#[derive(Debug, Error)]
pub enum CimError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("layout needs {needed_cells} cells but only {available_cells} exist (deficit {})", needed_cells - available_cells)]
    Capacity { needed_cells: u64, available_cells: u64 },
    #[error("budget of {budget} slots cannot cover {needed} offsets with work")]
    Budget { budget: u64, needed: u64 },
    #[error("offset {offset} has pairs but no placed copy")]
    Uncovered { offset: u32 },
    #[error("bad histogram: {0}")]
    Histogram(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
