use super::{AccessStats, BufferConfig, InOutMap, MapEntry, SearchError};
use crate::tensor::{kernel_offsets, source_coord, ConvVariant, KernelSpec, VoxelCoord, VoxelSource};

/// Weight-major search: one pass over the whole coordinate stream per kernel offset.
///
/// Traffic model: the stream is `D` records (`N` for submanifold, inputs plus
/// outputs otherwise). If both FIFOs together hold `D` the stream is read once;
/// otherwise the first offset reads everything and every later offset
/// re-reads whatever did not stay resident, `D - C` records.
pub fn weight_major_search(
    input: &impl VoxelSource,
    outputs: &impl VoxelSource,
    spec: &KernelSpec,
    buf: &BufferConfig,
) -> Result<(InOutMap, AccessStats), SearchError> {
    let inputs = input.coords();
    let outs = outputs.coords();
    let offsets = kernel_offsets(spec);
    let mut entries = Vec::new();
    let mut queries: Vec<(VoxelCoord, u32)> = Vec::with_capacity(outs.len());

    for (o, &d) in offsets.iter().enumerate() {
        queries.clear();
        queries.extend(outs.iter().enumerate().filter_map(|(j, &q)| source_coord(spec, q, d).map(|p| (p, j as u32))));
        if spec.variant() == ConvVariant::Transposed {
            queries.sort_unstable_by_key(|(p, _)| *p);
        }
        merge_join(inputs, &queries, |i, j| entries.push(MapEntry::new(i, j, o as u16)));
    }

    let d = if spec.variant() == ConvVariant::Submanifold {
        inputs.len() as u64
    } else {
        (inputs.len() + outs.len()) as u64
    };
    let cap = buf.fifo_total() as u64;
    let k3 = offsets.len() as u64;
    let mut stats = AccessStats::new(inputs.len());
    stats.offchip_coord_reads = if d <= cap { d } else { d + (k3 - 1) * (d - cap) };
    let per_pass = (outs.len() + inputs.len()) as u64;
    stats.sorter_invocations = k3 * per_pass.div_ceil(buf.sorter_len() as u64);
    stats.peak_fifo_occupancy = d.min(cap);
    let map = InOutMap::from_entries(entries)?;
    Ok((map, stats.finish()))
}

/// Calls `hit(input_idx, payload)` for every query coordinate present in `inputs`.
/// Both slices must be sorted by coordinate.
pub(crate) fn merge_join(inputs: &[VoxelCoord], queries: &[(VoxelCoord, u32)], mut hit: impl FnMut(u32, u32)) {
    let mut i = 0;
    for &(p, payload) in queries {
        while i < inputs.len() && inputs[i] < p {
            i += 1;
        }
        if i == inputs.len() {
            break;
        }
        if inputs[i] == p {
            hit(i as u32, payload);
        }
    }
}
