use super::weight_major::merge_join;
use super::{check_same_coords, expand_symmetric, AccessStats, BufferConfig, InOutMap, MapEntry, SearchError};
use crate::tensor::{half_offsets, ConvVariant, KernelSpec, TensorError, VoxelCoord, VoxelSource};

/// Output-major search over whole depths.
///
/// Outputs are visited depth by depth. The `r + 1` depths an output depth
/// reaches (`r = (K - 1) / 2`) are tiled into the combined FIFO capacity when
/// they fit, and only depths not already resident are fetched. When they do
/// not fit, outputs are processed in groups of half the capacity and each
/// group re-streams the span from its first output to the last record its
/// last output can reach.
pub fn output_major_search(
    input: &impl VoxelSource,
    outputs: &impl VoxelSource,
    spec: &KernelSpec,
    buf: &BufferConfig,
) -> Result<(InOutMap, AccessStats), SearchError> {
    if spec.variant() != ConvVariant::Submanifold {
        return Err(TensorError::UnsupportedVariant(spec.variant()).into());
    }
    if spec.size().is_multiple_of(2) {
        return Err(SearchError::UnsupportedKernel(*spec));
    }
    check_same_coords(input, outputs)?;
    let coords = input.coords();
    let half = half_offsets(spec)?;
    let r = (spec.size() as i32 - 1) / 2;
    let nz = input.shape().nz() as usize;
    let center = spec.center_index().expect("odd kernel") as u16;
    let half_idx: Vec<u16> = half.iter().map(|d| spec.offset_index(*d).unwrap() as u16).collect();

    // depth_start[z]..depth_start[z + 1] is depth z
    let mut depth_start = vec![0usize; nz + 1];
    for c in coords {
        depth_start[c.z as usize + 1] += 1;
    }
    for z in 0..nz {
        depth_start[z + 1] += depth_start[z];
    }

    let cap = buf.fifo_total();
    let l = buf.sorter_len() as u64;
    let q_per = half.len() as u64;
    let mut stats = AccessStats::new(coords.len());
    let mut resident: Option<(usize, usize)> = None;

    for z in 0..nz {
        let (lo, hi) = (depth_start[z], depth_start[z + 1]);
        if lo == hi {
            continue;
        }
        let top = (z + r as usize).min(nz - 1);
        let span_end = depth_start[top + 1];
        let t = span_end - lo;
        if t <= cap {
            let mut reads = 0;
            for d in z..=top {
                if !resident.is_some_and(|(a, b)| a <= d && d <= b) {
                    reads += depth_start[d + 1] - depth_start[d];
                }
            }
            stats.offchip_coord_reads += reads as u64;
            stats.sorter_invocations += (q_per * (hi - lo) as u64 + t as u64).div_ceil(l);
            stats.peak_fifo_occupancy = stats.peak_fifo_occupancy.max(t as u64);
            resident = Some((z, top));
        } else {
            let group = (cap / 2).max(1);
            let mut g = lo;
            while g < hi {
                let g_end = (g + group).min(hi);
                let last = coords[g_end - 1];
                let reach = VoxelCoord::new(last.x + r, last.y + r, last.z + r);
                let upper = coords.partition_point(|c| *c <= reach).max(g_end);
                let span = (upper - g) as u64;
                stats.offchip_coord_reads += span;
                stats.sorter_invocations += (q_per * (g_end - g) as u64 + span).div_ceil(l);
                stats.peak_fifo_occupancy = stats.peak_fifo_occupancy.max(span.min(cap as u64));
                g = g_end;
            }
            resident = None;
        }
    }

    let mut queries: Vec<(VoxelCoord, u32)> = Vec::with_capacity(coords.len() * half.len());
    for (j, q) in coords.iter().enumerate() {
        for (k, d) in half.iter().enumerate() {
            queries.push((d.apply(*q), (j * half.len() + k) as u32));
        }
    }
    queries.sort_unstable_by_key(|(p, _)| *p);
    let mut entries: Vec<MapEntry> = (0..coords.len() as u32).map(|i| MapEntry::new(i, i, center)).collect();
    let per = half.len() as u32;
    merge_join(coords, &queries, |i, payload| {
        entries.push(MapEntry::new(i, payload / per, half_idx[(payload % per) as usize]));
    });
    let map = expand_symmetric(&InOutMap::from_entries(entries)?, spec)?;
    Ok((map, stats.finish()))
}
