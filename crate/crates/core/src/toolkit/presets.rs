use super::{parse_config, SceneSpec, SpatialDistribution, SweepConfig, ToolkitError};
use crate::tensor::GridShape;

const LOW_RES: &str = include_str!("../../configs/low-res.toml");
const HIGH_RES: &str = include_str!("../../configs/high-res.toml");
const TRADEOFF: &str = include_str!("../../configs/tradeoff.toml");

pub const SWEEP_PRESETS: [&str; 3] = ["low-res", "high-res", "tradeoff"];

/// A bundled sweep configuration by name.
pub fn sweep_preset(name: &str) -> Result<SweepConfig, ToolkitError> {
    let text = match name {
        "low-res" => LOW_RES,
        "high-res" => HIGH_RES,
        "tradeoff" => TRADEOFF,
        other => {
            return Err(ToolkitError::Config(format!("unknown preset {other}; known: {}", SWEEP_PRESETS.join(", "))))
        }
    };
    parse_config(text)
}

/// A LiDAR-like height-field scene with a strongly skewed offset workload.
pub fn surface_scene(seed: u64) -> SceneSpec {
    SceneSpec {
        shape: GridShape::new(128, 128, 16).expect("valid shape"),
        sparsity: 0.02,
        distribution: SpatialDistribution::Surface { noise: 0.3 },
        seed,
    }
}
