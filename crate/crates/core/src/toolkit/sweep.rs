use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{generate_scene, SceneSpec, SweepConfig, ToolkitError};
use crate::mapsearch::{run_search, BufferConfig, SearchMethod};
use crate::tensor::SparseTensor;

/// First line of every sweep CSV. Bump the version when columns change.
pub const SWEEP_CSV_VERSION: &str = "#sweep-csv v1";

/// One CSV row: a method on one scene under one buffer configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub block_m: usize,
    pub block_n: usize,
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    pub sparsity: f64,
    pub seed: u64,
    pub distribution: String,
    pub sorter_len: usize,
    pub fifo_capacity_i: usize,
    pub fifo_capacity_ii: usize,
    pub backup_capacity: usize,
    pub pairs: u64,
    pub voxels: u64,
    pub offchip_coord_reads: u64,
    pub normalized_access: f64,
    pub sorter_invocations: u64,
    pub table_reads: u64,
    pub table_size_entries: u64,
    pub replicated_voxels: u64,
    pub peak_fifo_occupancy: u64,
}

struct Job {
    scene: usize,
    method: SearchMethod,
    buffer: BufferConfig,
    block_grid: (usize, usize),
}

/// Runs every job of the sweep and returns rows in config order:
/// grid, sparsity, seed, buffer, method, block grid.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, ToolkitError> {
    let methods = config
        .methods
        .iter()
        .map(|m| m.parse::<SearchMethod>().map_err(ToolkitError::Config))
        .collect::<Result<Vec<_>, _>>()?;
    if methods.contains(&SearchMethod::Oracle) {
        return Err(ToolkitError::Config("the oracle has no traffic model to sweep".into()));
    }
    if methods.contains(&SearchMethod::BlockDoms) && config.block_grids.is_empty() {
        return Err(ToolkitError::Config("block_doms needs at least one block grid".into()));
    }
    let mut scenes = Vec::new();
    for &shape in &config.grids {
        for &sparsity in &config.sparsities {
            for &seed in &config.seeds {
                scenes.push(SceneSpec { shape, sparsity, distribution: config.distribution, seed });
            }
        }
    }
    let mut jobs = Vec::new();
    for scene in 0..scenes.len() {
        for &buffer in &config.buffers {
            for &method in &methods {
                if method == SearchMethod::BlockDoms {
                    for &block_grid in &config.block_grids {
                        jobs.push(Job { scene, method, buffer, block_grid });
                    }
                } else {
                    jobs.push(Job { scene, method, buffer, block_grid: (1, 1) });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| ToolkitError::Config(format!("worker pool: {e}")))?;
    pool.install(|| {
        let tensors: Vec<SparseTensor> = scenes.par_iter().map(generate_scene).collect::<Result<_, _>>()?;
        jobs.par_iter()
            .map(|job| {
                let spec = &scenes[job.scene];
                let t = &tensors[job.scene];
                log::debug!("sweep job {} on {:?} seed {}", job.method, spec.shape, spec.seed);
                let out = run_search(job.method, t, t, &config.kernel, &job.buffer, job.block_grid)?;
                let s = out.stats.expect("every swept method reports traffic");
                Ok(SweepRow {
                    method: job.method.name().into(),
                    block_m: job.block_grid.0,
                    block_n: job.block_grid.1,
                    nx: spec.shape.nx(),
                    ny: spec.shape.ny(),
                    nz: spec.shape.nz(),
                    sparsity: spec.sparsity,
                    seed: spec.seed,
                    distribution: spec.distribution.to_string(),
                    sorter_len: job.buffer.sorter_len(),
                    fifo_capacity_i: job.buffer.fifo_capacity_i(),
                    fifo_capacity_ii: job.buffer.fifo_capacity_ii(),
                    backup_capacity: job.buffer.backup_capacity(),
                    pairs: out.map.len() as u64,
                    voxels: s.voxels,
                    offchip_coord_reads: s.offchip_coord_reads,
                    normalized_access: s.normalized_access,
                    sorter_invocations: s.sorter_invocations,
                    table_reads: s.table_reads,
                    table_size_entries: s.table_size_entries,
                    replicated_voxels: s.replicated_voxels,
                    peak_fifo_occupancy: s.peak_fifo_occupancy,
                })
            })
            .collect()
    })
}

/// Writes the version line, the header and one line per row.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<(), ToolkitError> {
    writeln!(out, "{SWEEP_CSV_VERSION}")?;
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(SWEEP_CSV_COLUMNS).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_CSV_COLUMNS: [&str; 22] = [
    "method",
    "block_m",
    "block_n",
    "nx",
    "ny",
    "nz",
    "sparsity",
    "seed",
    "distribution",
    "sorter_len",
    "fifo_capacity_i",
    "fifo_capacity_ii",
    "backup_capacity",
    "pairs",
    "voxels",
    "offchip_coord_reads",
    "normalized_access",
    "sorter_invocations",
    "table_reads",
    "table_size_entries",
    "replicated_voxels",
    "peak_fifo_occupancy",
];

fn csv_err(e: csv::Error) -> ToolkitError {
    ToolkitError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolkit::parse_config;

    fn small() -> SweepConfig {
        parse_config(
            r#"
methods = ["weight_major", "doms", "block_doms"]
grids = [[16, 16, 6]]
sparsities = [0.05, 0.1]
seeds = [3]
block_grids = [[1, 2], [2, 2]]
workers = 2
"#,
        )
        .unwrap()
    }

    #[test]
    fn rows_in_config_order() {
        let rows = run_sweep(&small()).unwrap();
        let keys: Vec<_> = rows.iter().map(|r| (r.sparsity, r.method.as_str(), r.block_m, r.block_n)).collect();
        assert_eq!(
            keys,
            [
                (0.05, "weight_major", 1, 1),
                (0.05, "doms", 1, 1),
                (0.05, "block_doms", 1, 2),
                (0.05, "block_doms", 2, 2),
                (0.1, "weight_major", 1, 1),
                (0.1, "doms", 1, 1),
                (0.1, "block_doms", 1, 2),
                (0.1, "block_doms", 2, 2),
            ]
        );
        // every method finds the same map on a scene
        assert!(rows[..4].iter().all(|r| r.pairs == rows[0].pairs));
    }

    #[test]
    fn csv_has_version_and_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&run_sweep(&small()).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SWEEP_CSV_VERSION));
        assert_eq!(lines.next().unwrap(), SWEEP_CSV_COLUMNS.join(","));
        assert_eq!(lines.count(), 8);
    }

    #[test]
    fn empty_sweep_still_has_header() {
        let mut buf = Vec::new();
        write_sweep_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn unknown_method_is_config_error() {
        let mut c = small();
        c.methods.push("hash_probe".into());
        assert!(matches!(run_sweep(&c), Err(ToolkitError::Config(_))));
        c.methods = vec!["oracle".into()];
        assert!(matches!(run_sweep(&c), Err(ToolkitError::Config(_))));
    }
}
