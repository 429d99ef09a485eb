use serde::{Deserialize, Serialize};

use super::{execute_spconv, SpconvError, WeightTensor};
use crate::mapsearch::{oracle_search, run_search, AccessStats, BufferConfig, InOutMap, SearchMethod};
use crate::tensor::{derive_output_coords, ConvVariant, CoordSet, KernelSpec, SparseTensor};

/// How submanifold layers search their maps. Strided layers always use the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    pub method: SearchMethod,
    pub buffer: BufferConfig,
    pub block_grid: (usize, usize),
    /// Keep every layer's output in [`ChainOutput::intermediates`].
    #[serde(default)]
    pub trace: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self { method: SearchMethod::Oracle, buffer: BufferConfig::default(), block_grid: (1, 1), trace: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub spec: KernelSpec,
    /// The map came from the previous layer instead of a new search.
    pub map_reused: bool,
    pub pairs: usize,
    pub outputs: usize,
    pub stats: Option<AccessStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub output: SparseTensor,
    pub layers: Vec<LayerReport>,
    /// Output of each layer, empty unless tracing.
    pub intermediates: Vec<SparseTensor>,
}

/// Runs `layers` in order. Consecutive submanifold layers with the same kernel
/// size share one map; each generalized layer saves its input coordinates for
/// the transposed layer that later restores them.
pub fn chain_layers(
    layers: &[(KernelSpec, WeightTensor)],
    input: &SparseTensor,
    opts: &ChainOptions,
) -> Result<ChainOutput, SpconvError> {
    let mut cur = input.clone();
    let mut saved: Vec<CoordSet> = Vec::new();
    let mut cached: Option<(KernelSpec, InOutMap)> = None;
    let mut reports = Vec::with_capacity(layers.len());
    let mut intermediates = Vec::new();

    for (spec, weights) in layers {
        let coords = cur.coord_set();
        let (outputs, map, reused, stats) = match spec.variant() {
            ConvVariant::Submanifold => match cached.take() {
                Some((prev, map)) if prev.size() == spec.size() => {
                    cached = Some((*spec, map.clone()));
                    (coords, map, true, None)
                }
                _ => {
                    let run = run_search(opts.method, &coords, &coords, spec, &opts.buffer, opts.block_grid)?;
                    cached = Some((*spec, run.map.clone()));
                    (coords, run.map, false, run.stats)
                }
            },
            ConvVariant::Generalized => {
                cached = None;
                let out = derive_output_coords(&coords, spec, None)?;
                let map = oracle_search(&coords, &out, spec);
                saved.push(coords);
                (out, map, false, None)
            }
            ConvVariant::Transposed => {
                cached = None;
                let targets = saved.pop().ok_or(crate::tensor::TensorError::MissingTargets)?;
                let out = derive_output_coords(&coords, spec, Some(&targets))?;
                let map = oracle_search(&coords, &out, spec);
                (out, map, false, None)
            }
        };
        let next = execute_spconv(&cur, &outputs, &map, weights)?;
        reports.push(LayerReport { spec: *spec, map_reused: reused, pairs: map.len(), outputs: outputs.len(), stats });
        if opts.trace {
            intermediates.push(next.clone());
        }
        cur = next;
    }
    Ok(ChainOutput { output: cur, layers: reports, intermediates })
}
