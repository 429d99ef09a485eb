use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use spvox::tensor::{GridShape, VoxelCoord};
use spvox::toolkit::{cell_centers, generate_scene, voxelize, PointCloud, SceneSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn spvox() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spvox"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn p_value(counts: &[f64]) -> f64 {
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let stat: f64 = counts.iter().map(|c| (c - mean).powi(2) / mean).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn uniform_scenes_pass_chi_square_per_depth() {
    let shape = GridShape::new(64, 64, 8).unwrap();
    let mut per_depth = vec![0.0; 8];
    let mut per_column = vec![vec![0.0; 16]; 8];
    for seed in 0..20 {
        let t = generate_scene(&SceneSpec::uniform(shape, 0.05, seed)).unwrap();
        for c in t.coords() {
            per_depth[c.z as usize] += 1.0;
            per_column[c.z as usize][(c.x / 4) as usize] += 1.0;
        }
    }
    assert!(p_value(&per_depth) > 0.01, "depth counts {per_depth:?}");
    for (z, cols) in per_column.iter().enumerate() {
        assert!(p_value(cols) > 0.01, "depth {z}: {cols:?}");
    }
}

proptest! {
    #[test]
    fn voxelize_inverts_cell_centers(
        cells in prop::collection::btree_set((0i32..8, 0i32..8, 0i32..8), 0..40),
        origin in prop::array::uniform3(-10.0f64..10.0),
        size in 0.01f64..3.0,
    ) {
        let mut coords: Vec<_> = cells.into_iter().map(|(z, y, x)| VoxelCoord::new(x, y, z)).collect();
        coords.sort();
        let cloud = PointCloud::from_positions(cell_centers(&coords, origin, size));
        let t = voxelize(&cloud, origin, size, GridShape::cube(8)).unwrap();
        prop_assert_eq!(t.coords(), coords.as_slice());
    }
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "methods = [\"weight_major\", \"output_major\", \"doms\", \"block_doms\"]\ngrids = [[40, 40, 6], [24, 30, 4]]\nsparsities = [0.02, 0.1]\nseeds = [1, 2]\nblock_grids = [[1, 2], [2, 2]]\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "4", "4"] {
        let out = dir.path().join(format!("run{}.csv", outputs.len()));
        let st = spvox().arg("sweep").arg(&cfg).args(["--workers", workers, "--out"]).arg(&out).status().unwrap();
        assert!(st.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    assert!(outputs[0].starts_with(b"#sweep-csv v1\n"));
}

#[test]
fn example_configs_run() {
    for (cmd, file) in [
        ("gen", "gen.toml"),
        ("gen", "voxelize.toml"),
        ("search", "search.toml"),
        ("conv", "conv.toml"),
        ("cim", "cim.toml"),
        ("w2b", "w2b.toml"),
        ("pipeline", "pipeline.toml"),
    ] {
        let out = spvox().arg(cmd).arg(configs().join(file)).output().unwrap();
        assert!(out.status.success(), "{cmd} {file}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "metod = 1\n").unwrap();
    assert_eq!(spvox().arg("search").arg(&bad).status().unwrap().code(), Some(2));
    assert_eq!(spvox().arg("search").arg(dir.path().join("missing.toml")).status().unwrap().code(), Some(2));
    assert_eq!(spvox().args(["sweep", "--preset", "nope"]).status().unwrap().code(), Some(2));
    let unwritable = dir.path().join("no/such/dir/out.json");
    let st = spvox().arg("search").arg(configs().join("search.toml")).arg("--out").arg(unwritable).status().unwrap();
    assert_eq!(st.code(), Some(1));
}
