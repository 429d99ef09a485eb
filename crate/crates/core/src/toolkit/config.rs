//! TOML configuration files for the CLI subcommands.
//!
//! Every file is a flat set of keys plus tables; unknown keys are rejected so
//! typos surface as config errors. See `configs/` for complete examples.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{SceneSpec, ToolkitError};
use crate::cimmodel::{Batching, CimGeometry, MappingScheme};
use crate::mapsearch::{BufferConfig, SearchMethod};
use crate::tensor::{GridShape, KernelSpec};

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T, ToolkitError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ToolkitError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T, ToolkitError> {
    toml::from_str(text).map_err(|e| ToolkitError::Config(e.to_string()))
}

fn subm3() -> KernelSpec {
    KernelSpec::subm(3)
}
fn one_by_one() -> (usize, usize) {
    (1, 1)
}
fn doms() -> SearchMethod {
    SearchMethod::Doms
}
fn oracle() -> SearchMethod {
    SearchMethod::Oracle
}
fn sixteen() -> u32 {
    16
}
fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn quarter() -> f64 {
    0.25
}
fn unit() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorFormat {
    #[default]
    Json,
    Binary,
}

/// `gen`: a synthetic scene or a voxelized point file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub scene: Option<SceneSpec>,
    pub voxelize: Option<VoxelizeConfig>,
    #[serde(default)]
    pub format: TensorFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoxelizeConfig {
    /// Text file of `x y z [f…]` rows, relative to the config file.
    pub points: PathBuf,
    #[serde(default)]
    pub origin: [f64; 3],
    pub voxel_size: f64,
    pub shape: GridShape,
}

/// `search`: one map search over a generated scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub scene: SceneSpec,
    #[serde(default = "doms")]
    pub method: SearchMethod,
    #[serde(default = "subm3")]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub buffer: BufferConfig,
    #[serde(default = "one_by_one")]
    pub block_grid: (usize, usize),
    /// Compare the map against the oracle; a mismatch exits with code 3.
    #[serde(default)]
    pub verify: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvLayerConfig {
    pub kernel: KernelSpec,
    pub c_out: usize,
}

/// `conv`: a chain of sparse convolution layers with random weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvConfig {
    pub scene: SceneSpec,
    /// Input feature width; features beyond occupancy are uniform in [-1, 1).
    #[serde(default = "one")]
    pub channels: usize,
    pub layers: Vec<ConvLayerConfig>,
    #[serde(default)]
    pub weight_seed: u64,
    #[serde(default)]
    pub quantized: bool,
    #[serde(default = "oracle")]
    pub method: SearchMethod,
    #[serde(default)]
    pub buffer: BufferConfig,
    #[serde(default = "one_by_one")]
    pub block_grid: (usize, usize),
    /// Check every layer against the dense oracle when the grid is small enough.
    #[serde(default = "yes")]
    pub verify: bool,
}

/// `cim`: workload histogram, layout and cycle estimate for one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CimConfig {
    pub scene: SceneSpec,
    #[serde(default = "subm3")]
    pub kernel: KernelSpec,
    #[serde(default = "sixteen")]
    pub c1: u32,
    #[serde(default = "sixteen")]
    pub c2: u32,
    #[serde(default)]
    pub geometry: CimGeometry,
    #[serde(default = "sub_matrix")]
    pub scheme: MappingScheme,
    #[serde(default)]
    pub batching: Batching,
    /// Sub-matrix slots for W2B; omitted means one copy per offset.
    pub w2b_budget: Option<u64>,
}

fn sub_matrix() -> MappingScheme {
    MappingScheme::SubMatrix
}

/// `w2b`: copy factors for a histogram taken from a scene or given directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct W2bConfig {
    pub scene: Option<SceneSpec>,
    /// Explicit per-offset pair counts, used instead of a scene.
    pub pairs: Option<Vec<u64>>,
    #[serde(default = "subm3")]
    pub kernel: KernelSpec,
    pub budget: Option<u64>,
    /// Budget as a multiple of the offset count when `budget` is absent.
    #[serde(default = "two")]
    pub budget_factor: f64,
}

fn two() -> f64 {
    2.0
}

/// Conversion from hardware counters to abstract time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyUnits {
    #[serde(default = "unit")]
    pub per_sorter_invocation: f64,
    #[serde(default = "unit")]
    pub per_mac_wave: f64,
}

impl Default for LatencyUnits {
    fn default() -> Self {
        Self { per_sorter_invocation: 1.0, per_mac_wave: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineLayerConfig {
    pub id: String,
    #[serde(default = "subm3")]
    pub kernel: KernelSpec,
    pub ms_latency: Option<f64>,
    pub compute_latency: Option<f64>,
    pub map_shared_with_prev: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

/// `pipeline`: hybrid schedule of a layer list. Missing latencies are derived
/// from `scene` by running the searches and the cycle model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "quarter")]
    pub overlap_threshold: f64,
    /// Mark map sharing from the kernels when a layer does not say.
    #[serde(default = "yes")]
    pub auto_share: bool,
    pub layers: Vec<PipelineLayerConfig>,
    pub scene: Option<SceneSpec>,
    #[serde(default = "doms")]
    pub method: SearchMethod,
    #[serde(default)]
    pub buffer: BufferConfig,
    #[serde(default)]
    pub units: LatencyUnits,
    #[serde(default = "sixteen")]
    pub channels: u32,
    #[serde(default)]
    pub geometry: CimGeometry,
    #[serde(default)]
    pub format: ReportFormat,
}

/// `sweep`: methods × grids × sparsities × seeds × buffers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: String,
    /// Method names; parsed when the sweep runs so unknown names are config errors.
    pub methods: Vec<String>,
    pub grids: Vec<GridShape>,
    pub sparsities: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_buffers")]
    pub buffers: Vec<BufferConfig>,
    /// Partitions tried by `block_doms`.
    #[serde(default = "default_block_grids")]
    pub block_grids: Vec<(usize, usize)>,
    #[serde(default)]
    pub distribution: super::SpatialDistribution,
    #[serde(default = "subm3")]
    pub kernel: KernelSpec,
    /// Parallel jobs; 0 lets the runtime choose.
    #[serde(default)]
    pub workers: usize,
}

fn default_buffers() -> Vec<BufferConfig> {
    vec![BufferConfig::default()]
}
fn default_block_grids() -> Vec<(usize, usize)> {
    vec![(2, 8)]
}
