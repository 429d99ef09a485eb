//! Generate synthetic scenes and voxelize a small point cloud.

use spvox::tensor::GridShape;
use spvox::toolkit::{generate_scene, parse_points, voxelize, SceneSpec, SpatialDistribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shape = GridShape::new(352, 400, 10)?;
    for distribution in [
        SpatialDistribution::Uniform,
        SpatialDistribution::Clustered { num_clusters: 12, spread: 6.0 },
        SpatialDistribution::Surface { noise: 0.5 },
    ] {
        let spec = SceneSpec { shape, sparsity: 0.005, distribution, seed: 7 };
        let t = generate_scene(&spec)?;
        println!("{distribution:<16} expected {:>7.0}  got {:>6}", spec.expected_count(), t.len());
    }

    let cloud = parse_points("0.10 0.10 0.10 1.0\n0.20 0.30 0.40 3.0\n2.5 1.5 0.5 7.0\n")?;
    let t = voxelize(&cloud, [0.0; 3], 1.0, GridShape::cube(4))?;
    for (i, c) in t.coords().iter().enumerate() {
        println!("voxel {c} feature {:?}", t.feature(i));
    }
    Ok(())
}
