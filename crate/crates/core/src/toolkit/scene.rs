use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use serde::{Deserialize, Serialize};

use super::ToolkitError;
use crate::tensor::{CoordSet, GridShape, SparseTensor, VoxelCoord};

/// Spatial layout of generated voxels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum SpatialDistribution {
    /// Independent Bernoulli occupancy per voxel.
    #[default]
    Uniform,
    /// Gaussian blobs around uniformly placed centers.
    Clustered { num_clusters: u32, spread: f64 },
    /// A smooth height field over `(x, y)` with Gaussian height noise.
    Surface { noise: f64 },
}

impl std::fmt::Display for SpatialDistribution {
    /// `uniform`, `clustered:<clusters>:<spread>` or `surface:<noise>`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpatialDistribution::Uniform => f.write_str("uniform"),
            SpatialDistribution::Clustered { num_clusters, spread } => write!(f, "clustered:{num_clusters}:{spread}"),
            SpatialDistribution::Surface { noise } => write!(f, "surface:{noise}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub shape: GridShape,
    pub sparsity: f64,
    #[serde(default)]
    pub distribution: SpatialDistribution,
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn uniform(shape: GridShape, sparsity: f64, seed: u64) -> Self {
        Self { shape, sparsity, distribution: SpatialDistribution::Uniform, seed }
    }

    pub fn expected_count(&self) -> f64 {
        self.sparsity * self.shape.volume() as f64
    }
}

/// Generates an occupancy tensor (one channel, all ones). Deterministic per seed.
///
/// Scenes whose expected count is below one voxel log a warning and come back empty.
pub fn generate_scene(spec: &SceneSpec) -> Result<SparseTensor, ToolkitError> {
    if !(spec.sparsity > 0.0 && spec.sparsity <= 1.0) {
        return Err(ToolkitError::Config(format!("sparsity {} outside (0, 1]", spec.sparsity)));
    }
    if spec.expected_count() < 1.0 {
        log::warn!(
            "empty scene: sparsity {} on {} voxels expects fewer than one occupied voxel",
            spec.sparsity,
            spec.shape.volume()
        );
        return Ok(SparseTensor::occupancy(CoordSet::empty(spec.shape)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let set = match spec.distribution {
        SpatialDistribution::Uniform => uniform(spec.shape, spec.sparsity, &mut rng),
        SpatialDistribution::Clustered { num_clusters, spread } => clustered(spec, num_clusters, spread, &mut rng)?,
        SpatialDistribution::Surface { noise } => surface(spec, noise, &mut rng)?,
    };
    Ok(SparseTensor::occupancy(set))
}

/// Skips geometric gaps along the linear index, so coordinates come out canonical.
fn uniform(shape: GridShape, p: f64, rng: &mut ChaCha8Rng) -> CoordSet {
    let volume = shape.volume();
    let mut coords = Vec::with_capacity((volume as f64 * p * 1.05) as usize + 16);
    if p >= 1.0 {
        coords.extend((0..volume as usize).map(|i| shape.coord_of(i)));
    } else {
        let gap = Geometric::new(p).expect("p in (0, 1)");
        let mut idx = gap.sample(rng);
        while idx < volume {
            coords.push(shape.coord_of(idx as usize));
            idx = idx.saturating_add(1 + gap.sample(rng));
        }
    }
    CoordSet::new(shape, coords).expect("ascending linear indices are canonical")
}

fn clustered(spec: &SceneSpec, num_clusters: u32, spread: f64, rng: &mut ChaCha8Rng) -> Result<CoordSet, ToolkitError> {
    if num_clusters == 0 || spread.is_nan() || spread <= 0.0 {
        return Err(ToolkitError::Config("clustered scenes need clusters > 0 and spread > 0".into()));
    }
    let shape = spec.shape;
    let target = spec.expected_count().round() as usize;
    let centers: Vec<[f64; 3]> = (0..num_clusters)
        .map(|_| {
            [
                rng.random_range(0.0..shape.nx() as f64),
                rng.random_range(0.0..shape.ny() as f64),
                rng.random_range(0.0..shape.nz() as f64),
            ]
        })
        .collect();
    let jitter = Normal::new(0.0, spread).expect("positive spread");
    let mut seen = std::collections::HashSet::with_capacity(target);
    let mut coords = Vec::with_capacity(target);
    let max_draws = target.saturating_mul(50).max(1000);
    for _ in 0..max_draws {
        if coords.len() == target {
            break;
        }
        let c = centers[rng.random_range(0..centers.len())];
        let v = VoxelCoord::new(
            (c[0] + jitter.sample(rng)).floor() as i32,
            (c[1] + jitter.sample(rng)).floor() as i32,
            (c[2] + jitter.sample(rng)).floor() as i32,
        );
        if shape.contains(&v) && seen.insert(v) {
            coords.push(v);
        }
    }
    if coords.len() < target {
        log::warn!("clustered scene saturated at {} of {} voxels", coords.len(), target);
    }
    Ok(CoordSet::from_unsorted(shape, coords)?)
}

fn surface(spec: &SceneSpec, noise: f64, rng: &mut ChaCha8Rng) -> Result<CoordSet, ToolkitError> {
    if noise.is_nan() || noise < 0.0 {
        return Err(ToolkitError::Config("surface noise must be non-negative".into()));
    }
    let shape = spec.shape;
    let (nx, ny, nz) = (shape.nx() as f64, shape.ny() as f64, shape.nz() as f64);
    // one voxel per occupied column, so the column hit rate carries the sparsity
    let p = (spec.sparsity * nz).min(1.0);
    let phase: [f64; 2] = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
    let amp = 0.25 * nz;
    let height = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("valid noise");
    let mut coords = Vec::new();
    for y in 0..shape.ny() {
        for x in 0..shape.nx() {
            if rng.random::<f64>() >= p {
                continue;
            }
            let u = TAU * x as f64 / nx;
            let v = TAU * y as f64 / ny;
            let h = 0.5 * nz + amp * ((u + phase[0]).sin() * 0.6 + (2.0 * v + phase[1]).cos() * 0.4);
            let dz = if noise > 0.0 { height.sample(rng) } else { 0.0 };
            let z = (h + dz).round().clamp(0.0, nz - 1.0) as i32;
            coords.push(VoxelCoord::new(x as i32, y as i32, z));
        }
    }
    Ok(CoordSet::from_unsorted(shape, coords)?)
}
