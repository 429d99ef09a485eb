//! Scene generation, point-cloud ingestion, configuration, sweeps and the CLI.

pub mod cli;
mod config;
mod presets;
mod scene;
mod sweep;
mod voxelize;

use thiserror::Error;

pub use config::{
    load_config, parse_config, CimConfig, ConvConfig, ConvLayerConfig, GenConfig, LatencyUnits, PipelineConfig,
    PipelineLayerConfig, ReportFormat, SearchConfig, SweepConfig, TensorFormat, VoxelizeConfig, W2bConfig,
};
pub use presets::{surface_scene, sweep_preset, SWEEP_PRESETS};
pub use scene::{generate_scene, SceneSpec, SpatialDistribution};
pub use sweep::{run_sweep, write_sweep_csv, SweepRow, SWEEP_CSV_COLUMNS, SWEEP_CSV_VERSION};
pub use voxelize::{cell_centers, parse_points, voxelize, PointCloud};

#[derive(Debug, Error)]
pub enum ToolkitError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error(transparent)]
    Search(#[from] crate::mapsearch::SearchError),
    #[error(transparent)]
    Spconv(#[from] crate::spconv::SpconvError),
    #[error(transparent)]
    Cim(#[from] crate::cimmodel::CimError),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ToolkitError {
    /// Process exit code: 2 for bad input, 3 for a violated internal
    /// invariant, 1 when output cannot be written.
    pub fn exit_code(&self) -> i32 {
        use crate::mapsearch::SearchError;
        use crate::spconv::SpconvError;
        match self {
            ToolkitError::Invariant(_)
            | ToolkitError::Search(SearchError::DuplicateEntry(_))
            | ToolkitError::Spconv(SpconvError::MapIndex(_)) => 3,
            ToolkitError::Io(_) => 1,
            _ => 2,
        }
    }
}
