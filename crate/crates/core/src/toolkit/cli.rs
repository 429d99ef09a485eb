//! Command-line front end. Every subcommand reads one TOML config and writes
//! its result to stdout or `--out`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::*;
use crate::cimmodel::{
    layout_submatrix, layout_traditional, spconv_cycles, w2b_optimize, workload_histogram, write_histogram_csv,
    Batching, CimLayout, MappingScheme, WorkloadHistogram,
};
use crate::mapsearch::{oracle_search, run_search, weight_major_search, InOutMap, SearchMethod};
use crate::pipeline::{can_share_map, schedule_hybrid, write_gantt_csv, LayerNode};
use crate::spconv::{chain_layers, dense_oracle, ChainOptions, WeightTensor, DENSE_ORACLE_MAX_VOXELS};
use crate::tensor::{derive_output_coords, io as tensor_io, ConvVariant, CoordSet, KernelSpec};

#[derive(Debug, Parser)]
#[command(name = "spvox", version, about = "Sparse voxel map search and CIM dataflow simulator")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SceneOverrides {
    /// Replace the scene seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace the scene sparsity.
    #[arg(long)]
    pub sparsity: Option<f64>,
}

impl SceneOverrides {
    fn apply(&self, scene: &mut SceneSpec) {
        if let Some(s) = self.seed {
            scene.seed = s;
        }
        if let Some(s) = self.sparsity {
            scene.sparsity = s;
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scene or voxelize a point file.
    Gen {
        config: PathBuf,
        #[command(flatten)]
        scene: SceneOverrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one map search and report its traffic.
    Search {
        config: PathBuf,
        #[command(flatten)]
        scene: SceneOverrides,
        #[arg(long)]
        method: Option<SearchMethod>,
        /// Block partition as MxN.
        #[arg(long, value_parser = parse_grid)]
        block_grid: Option<(usize, usize)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a chain of sparse convolutions.
    Conv {
        config: PathBuf,
        #[command(flatten)]
        scene: SceneOverrides,
        #[arg(long)]
        method: Option<SearchMethod>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Workload histogram, weight layout and cycle estimate.
    Cim {
        config: PathBuf,
        #[command(flatten)]
        scene: SceneOverrides,
        #[arg(long)]
        budget: Option<u64>,
        /// Print the histogram as CSV instead of the JSON report.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Balance copy factors over a slot budget.
    W2b {
        config: PathBuf,
        #[command(flatten)]
        scene: SceneOverrides,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Schedule layers on the hybrid pipeline.
    Pipeline {
        config: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep config or a bundled preset and write CSV.
    Sweep {
        #[arg(required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// low-res, high-res or tradeoff.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected MxN, got {s}"))?;
    Ok((m.trim().parse().map_err(|e| format!("{e}"))?, n.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), ToolkitError> {
    match out {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| std::io::Error::new(e.kind(), format!("cannot write {}: {e}", p.display())))?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn emit_json(out: &Option<PathBuf>, value: &impl Serialize) -> Result<(), ToolkitError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    emit(out, text.as_bytes())
}

pub fn run(cli: Cli) -> Result<(), ToolkitError> {
    match cli.command {
        Command::Gen { config, scene, out } => cmd_gen(&config, &scene, &out),
        Command::Search { config, scene, method, block_grid, out } => {
            let mut c: SearchConfig = load_config(&config)?;
            scene.apply(&mut c.scene);
            c.method = method.unwrap_or(c.method);
            c.block_grid = block_grid.unwrap_or(c.block_grid);
            emit_json(&out, &search_report(&c)?)
        }
        Command::Conv { config, scene, method, out } => {
            let mut c: ConvConfig = load_config(&config)?;
            scene.apply(&mut c.scene);
            c.method = method.unwrap_or(c.method);
            emit_json(&out, &conv_report(&c)?)
        }
        Command::Cim { config, scene, budget, csv, out } => {
            let mut c: CimConfig = load_config(&config)?;
            scene.apply(&mut c.scene);
            c.w2b_budget = budget.or(c.w2b_budget);
            let (report, hist) = cim_report(&c)?;
            if csv {
                let mut buf = Vec::new();
                write_histogram_csv(&hist, &mut buf)?;
                emit(&out, &buf)
            } else {
                emit_json(&out, &report)
            }
        }
        Command::W2b { config, scene, budget, out } => {
            let mut c: W2bConfig = load_config(&config)?;
            if let Some(s) = c.scene.as_mut() {
                scene.apply(s);
            }
            c.budget = budget.or(c.budget);
            let hist = w2b_histogram(&c)?;
            let mut buf = Vec::new();
            write_histogram_csv(&hist, &mut buf)?;
            emit(&out, &buf)
        }
        Command::Pipeline { config, threshold, json, out } => {
            let mut c: PipelineConfig = load_config(&config)?;
            c.overlap_threshold = threshold.unwrap_or(c.overlap_threshold);
            if json {
                c.format = ReportFormat::Json;
            }
            let schedule = schedule_hybrid(&pipeline_layers(&c)?, c.overlap_threshold)?;
            match c.format {
                ReportFormat::Json => emit_json(&out, &schedule),
                ReportFormat::Csv => {
                    let mut buf = Vec::new();
                    write_gantt_csv(&schedule, &mut buf)?;
                    emit(&out, &buf)
                }
            }
        }
        Command::Sweep { config, preset, workers, out } => {
            let mut c = match (config, preset) {
                (Some(p), _) => load_config::<SweepConfig>(&p)?,
                (None, Some(name)) => sweep_preset(&name)?,
                (None, None) => return Err(ToolkitError::Config("sweep needs a config or --preset".into())),
            };
            c.workers = workers.unwrap_or(c.workers);
            let rows = run_sweep(&c)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            emit(&out, &buf)
        }
    }
}

fn cmd_gen(path: &Path, overrides: &SceneOverrides, out: &Option<PathBuf>) -> Result<(), ToolkitError> {
    let c: GenConfig = load_config(path)?;
    let tensor = match (c.scene, &c.voxelize) {
        (Some(mut s), None) => {
            overrides.apply(&mut s);
            generate_scene(&s)?
        }
        (None, Some(v)) => {
            let base = path.parent().unwrap_or(Path::new("."));
            let file = base.join(&v.points);
            let text = std::fs::read_to_string(&file)
                .map_err(|e| ToolkitError::Config(format!("cannot read {}: {e}", file.display())))?;
            voxelize(&parse_points(&text)?, v.origin, v.voxel_size, v.shape)?
        }
        _ => return Err(ToolkitError::Config("gen needs exactly one of [scene] or [voxelize]".into())),
    };
    match c.format {
        TensorFormat::Json => {
            let mut text = tensor_io::to_json(&tensor);
            text.push('\n');
            emit(out, text.as_bytes())
        }
        TensorFormat::Binary => {
            let mut buf = Vec::new();
            tensor_io::write_binary(&tensor, &mut buf)?;
            emit(out, &buf)
        }
    }
}

/// Output coordinates of one layer and the coordinates a transposed layer needs.
fn layer_outputs(cur: &CoordSet, spec: &KernelSpec, saved: &mut Vec<CoordSet>) -> Result<CoordSet, ToolkitError> {
    Ok(match spec.variant() {
        ConvVariant::Submanifold => cur.clone(),
        ConvVariant::Generalized => {
            saved.push(cur.clone());
            derive_output_coords(cur, spec, None)?
        }
        ConvVariant::Transposed => {
            let targets = saved.pop().ok_or(crate::tensor::TensorError::MissingTargets)?;
            derive_output_coords(cur, spec, Some(&targets))?
        }
    })
}

pub fn search_report(c: &SearchConfig) -> Result<serde_json::Value, ToolkitError> {
    let t = generate_scene(&c.scene)?;
    let outputs = layer_outputs(&t.coord_set(), &c.kernel, &mut Vec::new())?;
    let run = run_search(c.method, &t, &outputs, &c.kernel, &c.buffer, c.block_grid)?;
    let verified = if c.verify {
        if run.map != oracle_search(&t, &outputs, &c.kernel) {
            return Err(ToolkitError::Invariant(format!("{} map differs from the oracle", c.method)));
        }
        Some(true)
    } else {
        None
    };
    Ok(json!({
        "method": c.method,
        "kernel": c.kernel,
        "block_grid": c.block_grid,
        "scene": c.scene,
        "voxels": t.len(),
        "outputs": outputs.len(),
        "pairs": run.map.len(),
        "stats": run.stats,
        "verified": verified,
    }))
}

pub fn conv_report(c: &ConvConfig) -> Result<serde_json::Value, ToolkitError> {
    if c.channels == 0 || c.layers.iter().any(|l| l.c_out == 0) {
        return Err(ToolkitError::Config("channel counts must be positive".into()));
    }
    let occ = generate_scene(&c.scene)?;
    let input = if c.channels == 1 {
        occ
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(c.weight_seed ^ 0x5eed_f00d);
        let feats = (0..occ.len() * c.channels).map(|_| rng.random_range(-1.0..1.0)).collect();
        occ.with_features(c.channels, feats)?
    };
    let mut layers = Vec::with_capacity(c.layers.len());
    let mut width = c.channels;
    for (i, l) in c.layers.iter().enumerate() {
        let w = WeightTensor::random(l.kernel.size(), width, l.c_out, c.weight_seed.wrapping_add(i as u64))?;
        layers.push((l.kernel, if c.quantized { w.quantize() } else { w }));
        width = l.c_out;
    }
    let small = input.shape().volume() <= DENSE_ORACLE_MAX_VOXELS;
    let opts = ChainOptions { method: c.method, buffer: c.buffer, block_grid: c.block_grid, trace: c.verify && small };
    let run = chain_layers(&layers, &input, &opts)?;

    let mut diffs = Vec::new();
    if opts.trace {
        let tol = if c.quantized { 0.0 } else { 1e-6 };
        for (i, ((spec, w), out)) in layers.iter().zip(&run.intermediates).enumerate() {
            let layer_in = if i == 0 { &input } else { &run.intermediates[i - 1] };
            let targets = (spec.variant() == ConvVariant::Transposed).then(|| out.coord_set());
            let diff = dense_oracle(layer_in, spec, w, targets.as_ref())?.max_abs_diff(out)?;
            if diff > tol {
                return Err(ToolkitError::Invariant(format!("layer {i} differs from the dense oracle by {diff}")));
            }
            diffs.push(diff);
        }
    }
    let checksum: f64 = run.output.features().iter().sum();
    Ok(json!({
        "scene": c.scene,
        "method": c.method,
        "quantized": c.quantized,
        "input_voxels": input.len(),
        "layers": run.layers,
        "output_voxels": run.output.len(),
        "output_channels": run.output.channels(),
        "output_checksum": checksum,
        "dense_max_abs_diff": if opts.trace { Some(diffs) } else { None },
    }))
}

fn scene_map(scene: &SceneSpec, spec: &KernelSpec) -> Result<InOutMap, ToolkitError> {
    let t = generate_scene(scene)?;
    let outputs = layer_outputs(&t.coord_set(), spec, &mut Vec::new())?;
    Ok(oracle_search(&t, &outputs, spec))
}

fn layout_for(c: &CimConfig, copies: &[u32]) -> Result<CimLayout, ToolkitError> {
    Ok(match c.scheme {
        MappingScheme::SubMatrix => layout_submatrix(c.kernel, c.c1, c.c2, &c.geometry, copies)?,
        MappingScheme::Traditional => layout_traditional(c.kernel, c.c1, c.c2, &c.geometry)?,
    })
}

pub fn cim_report(c: &CimConfig) -> Result<(serde_json::Value, WorkloadHistogram), ToolkitError> {
    let map = scene_map(&c.scene, &c.kernel)?;
    let hist = workload_histogram(&map, &c.kernel);
    let ones = vec![1; hist.len()];
    let layout = layout_for(c, &ones)?;
    let layout_summary = |l: &CimLayout| {
        json!({
            "scheme": l.scheme,
            "block_rows": l.block_rows,
            "block_cols": l.block_cols,
            "placements": l.placements.len(),
            "pes_used": l.pes_used,
            "row_folds": l.row_folds,
            "occupied_cells": l.occupied_cells,
            "utilized_fraction": l.utilized_fraction(),
        })
    };
    // traditional columns fire all offsets together, so only sub-matrix layouts get a cycle count
    let cycles = match c.scheme {
        MappingScheme::SubMatrix => Some(spconv_cycles(&map, &layout, &c.batching)?),
        MappingScheme::Traditional => None,
    };
    let mut report = json!({
        "scene": c.scene,
        "kernel": c.kernel,
        "pairs": hist.pairs,
        "max_min_ratio": hist.max_min_ratio(),
        "layout": layout_summary(&layout),
        "cycles": cycles,
    });
    let mut out_hist = hist.clone();
    if let Some(budget) = c.w2b_budget {
        if c.scheme != MappingScheme::SubMatrix {
            return Err(ToolkitError::Config("W2B needs the sub_matrix scheme".into()));
        }
        let copies = w2b_optimize(&hist, budget)?;
        let balanced = layout_submatrix(c.kernel, c.c1, c.c2, &c.geometry, &copies)?;
        let after = spconv_cycles(&map, &balanced, &c.batching)?;
        out_hist = hist.clone().with_copies(copies.clone())?;
        let before = cycles.as_ref().map_or(0, |r| r.cycles);
        report["w2b"] = json!({
            "budget": budget,
            "copies": copies,
            "layout": layout_summary(&balanced),
            "cycles": after,
            "speedup": if after.cycles == 0 { 1.0 } else { before as f64 / after.cycles as f64 },
            "normalized_max_min_ratio": out_hist.normalized_max_min_ratio(),
        });
    }
    Ok((report, out_hist))
}

pub fn w2b_histogram(c: &W2bConfig) -> Result<WorkloadHistogram, ToolkitError> {
    let hist = match (&c.scene, &c.pairs) {
        (Some(s), None) => workload_histogram(&scene_map(s, &c.kernel)?, &c.kernel),
        (None, Some(p)) => WorkloadHistogram::from_counts(p.clone()),
        _ => return Err(ToolkitError::Config("w2b needs exactly one of [scene] or pairs".into())),
    };
    let budget = match c.budget {
        Some(b) => b,
        None if c.budget_factor > 0.0 => (c.budget_factor * hist.len() as f64).round() as u64,
        None => return Err(ToolkitError::Config("budget_factor must be positive".into())),
    };
    let copies = w2b_optimize(&hist, budget)?;
    log::info!(
        "w2b: budget {budget}, max normalized workload {} -> {}",
        hist.max_normalized(),
        hist.clone().with_copies(copies.clone())?.max_normalized()
    );
    Ok(hist.with_copies(copies)?)
}

/// Builds the layer list, deriving missing latencies from the scene.
pub fn pipeline_layers(c: &PipelineConfig) -> Result<Vec<LayerNode>, ToolkitError> {
    let needs_scene = c.layers.iter().any(|l| l.ms_latency.is_none() || l.compute_latency.is_none());
    let mut nodes: Vec<LayerNode> = Vec::with_capacity(c.layers.len());
    for (i, l) in c.layers.iter().enumerate() {
        let shared = l
            .map_shared_with_prev
            .unwrap_or(c.auto_share && i > 0 && can_share_map(&c.layers[i - 1].kernel, &l.kernel));
        let mut node =
            LayerNode::new(l.id.clone(), l.kernel, l.ms_latency.unwrap_or(0.0), l.compute_latency.unwrap_or(0.0));
        node.map_shared_with_prev = shared;
        nodes.push(node);
    }
    if !needs_scene {
        return Ok(nodes);
    }
    let scene = c
        .scene
        .as_ref()
        .ok_or_else(|| ToolkitError::Config("layers without latencies need a [scene] to derive them from".into()))?;
    let t = generate_scene(scene)?;
    let mut cur = t.coord_set();
    let mut saved = Vec::new();
    let mut last_map = InOutMap::empty();
    for (l, node) in c.layers.iter().zip(nodes.iter_mut()) {
        let outputs = layer_outputs(&cur, &l.kernel, &mut saved)?;
        let (map, invocations) = if node.map_shared_with_prev {
            (last_map.clone(), 0)
        } else if l.kernel.variant() == ConvVariant::Submanifold {
            let run = run_search(c.method, &cur, &outputs, &l.kernel, &c.buffer, (1, 1))?;
            let inv = run.stats.map_or(0, |s| s.sorter_invocations);
            (run.map, inv)
        } else {
            let (m, s) = weight_major_search(&cur, &outputs, &l.kernel, &c.buffer)?;
            (m, s.sorter_invocations)
        };
        if l.ms_latency.is_none() {
            node.ms_latency = invocations as f64 * c.units.per_sorter_invocation;
        }
        if l.compute_latency.is_none() {
            let layout = layout_submatrix(l.kernel, c.channels, c.channels, &c.geometry, &vec![1; l.kernel.volume()])?;
            let cycles = spconv_cycles(&map, &layout, &Batching::default())?.cycles;
            node.compute_latency = cycles as f64 * c.units.per_mac_wave;
        }
        last_map = map;
        cur = outputs;
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        assert_eq!(parse_grid("2x8").unwrap(), (2, 8));
        assert!(parse_grid("2,8").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn pipeline_derives_latencies() {
        let c: PipelineConfig = parse_config(
            r#"
[scene]
shape = [16, 16, 8]
sparsity = 0.1
seed = 4

[[layers]]
id = "a"

[[layers]]
id = "b"

[[layers]]
id = "down"
kernel = { size = 2, stride = 2, variant = "generalized" }
"#,
        )
        .unwrap();
        let nodes = pipeline_layers(&c).unwrap();
        assert!(nodes[0].ms_latency > 0.0 && nodes[0].compute_latency > 0.0);
        assert!(nodes[1].map_shared_with_prev);
        assert_eq!(nodes[1].compute_latency, nodes[0].compute_latency);
        assert!(!nodes[2].map_shared_with_prev);
    }

    #[test]
    fn pipeline_without_scene_needs_latencies() {
        let c: PipelineConfig = parse_config("[[layers]]\nid = \"a\"\nms_latency = 1.0\n").unwrap();
        assert!(matches!(pipeline_layers(&c), Err(ToolkitError::Config(_))));
    }

    #[test]
    fn conv_report_verifies_small_chain() {
        let c: ConvConfig = parse_config(
            r#"
channels = 2
[scene]
shape = [12, 12, 12]
sparsity = 0.05
seed = 1

[[layers]]
kernel = { size = 3, stride = 1, variant = "submanifold" }
c_out = 3

[[layers]]
kernel = { size = 2, stride = 2, variant = "generalized" }
c_out = 2

[[layers]]
kernel = { size = 2, stride = 2, variant = "transposed" }
c_out = 1
"#,
        )
        .unwrap();
        let r = conv_report(&c).unwrap();
        assert_eq!(r["dense_max_abs_diff"].as_array().unwrap().len(), 3);
        assert_eq!(r["output_voxels"], r["input_voxels"]);
    }

    #[test]
    fn search_report_verifies() {
        let c: SearchConfig =
            parse_config("verify = true\nmethod = \"block_doms\"\nblock_grid = [2, 2]\n[scene]\nshape = [20, 20, 6]\nsparsity = 0.1\n")
                .unwrap();
        let r = search_report(&c).unwrap();
        assert_eq!(r["verified"], true);
    }
}
