use std::cmp::Reverse;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CimError, CimKernel, CimLayout};
use crate::mapsearch::InOutMap;

/// How the gather unit groups work into waves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batching {
    /// Output voxels whose pairs run in one wave.
    pub outputs_per_wave: usize,
}

impl Default for Batching {
    fn default() -> Self {
        Self { outputs_per_wave: 1024 }
    }
}

/// Per-event unit costs for the abstract energy counter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventCosts {
    pub mac_wave: f64,
    pub feature_fetch: f64,
    pub map_read: f64,
}

impl Default for EventCosts {
    fn default() -> Self {
        Self { mac_wave: 1.0, feature_fetch: 1.0, map_read: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    /// MAC waves over all batches.
    pub cycles: u64,
    pub batches: u64,
    pub total_pairs: u64,
    /// Placed copies whose offset has work.
    pub active_pes: u64,
    pub utilization: f64,
    /// Feature vectors fetched, after crediting those kept from the previous batch.
    pub feature_fetches: u64,
    /// Feature vectors fetched if every batch starts with an empty buffer.
    pub feature_fetches_no_reuse: u64,
}

impl CycleReport {
    pub fn energy(&self, costs: &EventCosts, map_reads: u64) -> f64 {
        self.cycles as f64 * costs.mac_wave
            + self.feature_fetches as f64 * costs.feature_fetch
            + map_reads as f64 * costs.map_read
    }
}

/// Weight-stationary cycle estimate for one sparse layer.
///
/// Outputs are taken in batches of `outputs_per_wave`. The first batch is the
/// lowest-indexed outputs; every later batch greedily takes the outputs whose
/// inputs overlap most with the previous batch's inputs (lowest index on
/// ties). Inside a batch each offset's pairs are dealt round-robin over its
/// copies, so the batch takes `max_δ ⌈pairs_δ / copies_δ⌉` cycles.
pub fn spconv_cycles(map: &InOutMap, layout: &CimLayout, batching: &Batching) -> Result<CycleReport, CimError> {
    if batching.outputs_per_wave == 0 {
        return Err(CimError::Geometry("outputs_per_wave must be positive".into()));
    }
    let n_off = layout.copy_factors.len();
    let mut per_offset = vec![0u64; n_off];
    for e in map.entries() {
        let o = e.offset as usize;
        if o >= n_off || layout.copy_factors[o] == 0 {
            return Err(CimError::Uncovered { offset: e.offset as u32 });
        }
        per_offset[o] += 1;
    }
    let active_pes: u64 =
        per_offset.iter().zip(&layout.copy_factors).filter(|(&p, _)| p > 0).map(|(_, &c)| c as u64).sum();

    // adjacency in both directions; the map is sorted by output
    let entries = map.entries();
    let n_out = entries.iter().map(|e| e.output as usize + 1).max().unwrap_or(0);
    let n_in = entries.iter().map(|e| e.input as usize + 1).max().unwrap_or(0);
    let mut out_start = vec![0usize; n_out + 1];
    for e in entries {
        out_start[e.output as usize + 1] += 1;
    }
    for i in 0..n_out {
        out_start[i + 1] += out_start[i];
    }
    let mut in_start = vec![0usize; n_in + 1];
    for e in entries {
        in_start[e.input as usize + 1] += 1;
    }
    for i in 0..n_in {
        in_start[i + 1] += in_start[i];
    }
    let mut fill = in_start.clone();
    let mut outs_of_in = vec![0u32; entries.len()];
    for e in entries {
        outs_of_in[fill[e.input as usize]] = e.output;
        fill[e.input as usize] += 1;
    }

    let mut score = vec![0u64; n_out];
    let mut remaining: BTreeSet<(Reverse<u64>, u32)> = (0..n_out as u32)
        .filter(|&o| out_start[o as usize + 1] > out_start[o as usize])
        .map(|o| (Reverse(0), o))
        .collect();
    let mut done = vec![false; n_out];
    // batch stamp of the last batch that held each input
    let mut held = vec![u64::MAX; n_in];
    let mut in_prev = vec![false; n_in];
    let mut prev_inputs: Vec<u32> = Vec::new();

    let mut report = CycleReport {
        cycles: 0,
        batches: 0,
        total_pairs: entries.len() as u64,
        active_pes,
        utilization: 0.0,
        feature_fetches: 0,
        feature_fetches_no_reuse: 0,
    };
    let mut wave_pairs = vec![0u64; n_off];
    while !remaining.is_empty() {
        let batch_id = report.batches;
        let batch: Vec<u32> =
            (0..batching.outputs_per_wave).map_while(|_| remaining.pop_first()).map(|(_, o)| o).collect();
        wave_pairs.iter_mut().for_each(|w| *w = 0);
        let mut inputs = Vec::new();
        for &o in &batch {
            done[o as usize] = true;
            for e in &entries[out_start[o as usize]..out_start[o as usize + 1]] {
                wave_pairs[e.offset as usize] += 1;
                let i = e.input as usize;
                if held[i] != batch_id {
                    held[i] = batch_id;
                    inputs.push(e.input);
                    if !in_prev[i] {
                        report.feature_fetches += 1;
                    }
                }
            }
        }
        report.feature_fetches_no_reuse += inputs.len() as u64;
        report.cycles += wave_pairs
            .iter()
            .zip(&layout.copy_factors)
            .filter(|(&p, _)| p > 0)
            .map(|(&p, &c)| p.div_ceil(c as u64))
            .max()
            .unwrap_or(0);

        // rescore the remaining outputs against the new resident input set
        let mut adjust = |i: u32, up: bool| {
            for &o in &outs_of_in[in_start[i as usize]..in_start[i as usize + 1]] {
                if done[o as usize] {
                    continue;
                }
                let s = &mut score[o as usize];
                remaining.remove(&(Reverse(*s), o));
                if up {
                    *s += 1;
                } else {
                    *s -= 1;
                }
                remaining.insert((Reverse(*s), o));
            }
        };
        for &i in &prev_inputs {
            if held[i as usize] != batch_id {
                adjust(i, false);
            }
        }
        for &i in &inputs {
            if !in_prev[i as usize] {
                adjust(i, true);
            }
        }
        for &i in &prev_inputs {
            in_prev[i as usize] = false;
        }
        for &i in &inputs {
            in_prev[i as usize] = true;
        }
        prev_inputs = inputs;
        report.batches += 1;
    }
    report.utilization = if report.cycles == 0 || active_pes == 0 {
        0.0
    } else {
        report.total_pairs as f64 / (report.cycles as f64 * active_pes as f64)
    };
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conv2dReport {
    pub out_h: u64,
    pub out_w: u64,
    pub cycles: u64,
    /// Input feature vectors times `C1`, with the sliding-window schedule.
    pub fetches: u64,
    /// `K²·H_out·W_out·C1`: every window refetched from scratch.
    pub naive_fetches: u64,
    pub reuse_factor: f64,
}

/// Dense 2D convolution (no padding, stride 1) on a sub-matrix layout.
///
/// Output positions are visited in raster order. A line buffer holds the last
/// `K` input rows, so an input vector is fetched the first time any window
/// touches it and then shifted across the `K²` sub-matrices. All sub-matrices
/// fire each cycle; the slowest offset's copy count sets the pace.
pub fn conv2d_reuse_cycles(h: u32, w: u32, c1: u32, k: u32, layout: &CimLayout) -> Result<Conv2dReport, CimError> {
    if layout.kernel != (CimKernel::Conv2d { size: k }) {
        return Err(CimError::Geometry(format!("layout is for {:?}, not a {k}x{k} 2D kernel", layout.kernel)));
    }
    if let Some(o) = layout.copy_factors.iter().position(|&c| c == 0) {
        return Err(CimError::Uncovered { offset: o as u32 });
    }
    if k == 0 || h < k || w < k {
        return Err(CimError::Geometry(format!("{h}x{w} map is smaller than a {k}x{k} kernel")));
    }
    let (h, w, k) = (h as usize, w as usize, k as usize);
    let (oh, ow) = (h - k + 1, w - k + 1);

    // resident[y] = row y sits in the line buffer; fetched[y][x] = vector loaded
    let mut resident_rows: Vec<usize> = Vec::with_capacity(k);
    let mut fetched = vec![false; h * w];
    let mut fetches = 0u64;
    for oy in 0..oh {
        for y in oy..oy + k {
            if !resident_rows.contains(&y) {
                if resident_rows.len() == k {
                    let evicted = resident_rows.remove(0);
                    fetched[evicted * w..(evicted + 1) * w].iter_mut().for_each(|f| *f = false);
                }
                resident_rows.push(y);
            }
        }
        for ox in 0..ow {
            for y in oy..oy + k {
                for x in ox..ox + k {
                    if !fetched[y * w + x] {
                        fetched[y * w + x] = true;
                        fetches += 1;
                    }
                }
            }
        }
    }
    let min_copies = *layout.copy_factors.iter().min().expect("kernel has offsets") as u64;
    let positions = (oh * ow) as u64;
    let cycles = positions.div_ceil(min_copies) + (k * k) as u64 - 1;
    let fetches = fetches * c1 as u64;
    let naive = (k * k) as u64 * positions * c1 as u64;
    Ok(Conv2dReport {
        out_h: oh as u64,
        out_w: ow as u64,
        cycles,
        fetches,
        naive_fetches: naive,
        reuse_factor: naive as f64 / fetches as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cimmodel::{layout_submatrix, CimGeometry};
    use crate::mapsearch::MapEntry;
    use crate::tensor::KernelSpec;

    fn layout(copies: &[u32]) -> CimLayout {
        layout_submatrix(KernelSpec::subm(3), 16, 16, &CimGeometry::default(), copies).unwrap()
    }

    #[test]
    fn balanced_workload_is_fully_utilized() {
        // one output with all 27 offsets, each from a different input
        let map = InOutMap::from_entries((0..27).map(|o| MapEntry::new(o, 0, o as u16)).collect()).unwrap();
        let r = spconv_cycles(&map, &layout(&[1; 27]), &Batching::default()).unwrap();
        assert_eq!(r.cycles, 1);
        assert_eq!(r.utilization, 1.0);
    }

    #[test]
    fn single_pair_is_one_cycle() {
        let map = InOutMap::from_entries(vec![MapEntry::new(0, 0, 13)]).unwrap();
        let r = spconv_cycles(&map, &layout(&[1; 27]), &Batching::default()).unwrap();
        assert_eq!((r.cycles, r.active_pes, r.feature_fetches), (1, 1, 1));
    }

    #[test]
    fn copies_split_round_robin() {
        let map = InOutMap::from_entries((0..10).map(|o| MapEntry::new(o, o, 13)).collect()).unwrap();
        let mut copies = [1; 27];
        assert_eq!(spconv_cycles(&map, &layout(&copies), &Batching::default()).unwrap().cycles, 10);
        copies[13] = 3;
        assert_eq!(spconv_cycles(&map, &layout(&copies), &Batching::default()).unwrap().cycles, 4);
    }

    #[test]
    fn batches_sum_their_waves() {
        let map = InOutMap::from_entries((0..10).map(|o| MapEntry::new(o, o, 13)).collect()).unwrap();
        let r = spconv_cycles(&map, &layout(&[1; 27]), &Batching { outputs_per_wave: 4 }).unwrap();
        assert_eq!((r.batches, r.cycles), (3, 10));
    }

    #[test]
    fn greedy_batch_follows_shared_inputs() {
        // outputs 0 and 3 share input 7; with one output per batch, 3 follows 0
        let map = InOutMap::from_entries(vec![
            MapEntry::new(7, 0, 13),
            MapEntry::new(1, 1, 13),
            MapEntry::new(2, 2, 13),
            MapEntry::new(7, 3, 12),
        ])
        .unwrap();
        let r = spconv_cycles(&map, &layout(&[1; 27]), &Batching { outputs_per_wave: 1 }).unwrap();
        assert_eq!(r.feature_fetches_no_reuse, 4);
        assert_eq!(r.feature_fetches, 3);
    }

    #[test]
    fn uncovered_offset_is_an_error() {
        let map = InOutMap::from_entries(vec![MapEntry::new(0, 0, 13)]).unwrap();
        let mut copies = [1; 27];
        copies[13] = 0;
        assert!(matches!(
            spconv_cycles(&map, &layout(&copies), &Batching::default()),
            Err(CimError::Uncovered { offset: 13 })
        ));
    }

    fn conv2d(k: u32) -> CimLayout {
        layout_submatrix(CimKernel::Conv2d { size: k }, 8, 8, &CimGeometry::default(), &vec![1; (k * k) as usize])
            .unwrap()
    }

    #[test]
    fn conv2d_1x1_has_no_reuse() {
        let r = conv2d_reuse_cycles(8, 8, 4, 1, &conv2d(1)).unwrap();
        assert_eq!(r.fetches, 8 * 8 * 4);
        assert_eq!(r.fetches, r.naive_fetches);
    }

    #[test]
    fn conv2d_single_window() {
        let r = conv2d_reuse_cycles(3, 3, 5, 3, &conv2d(3)).unwrap();
        assert_eq!(r.fetches, 9 * 5);
        assert_eq!((r.out_h, r.out_w), (1, 1));
    }

    #[test]
    fn conv2d_reuse_approaches_k_squared() {
        // brute-force naive count against the schedule
        let (h, w, k) = (8usize, 8usize, 3usize);
        let mut naive = 0;
        for _oy in 0..=h - k {
            for _ox in 0..=w - k {
                naive += k * k;
            }
        }
        let r = conv2d_reuse_cycles(8, 8, 1, 3, &conv2d(3)).unwrap();
        assert_eq!(r.naive_fetches, naive as u64);
        assert_eq!(r.fetches, 64);
        let big = conv2d_reuse_cycles(256, 256, 1, 3, &conv2d(3)).unwrap();
        assert!(big.reuse_factor > 8.8 && big.reuse_factor < 9.0);
    }

    #[test]
    fn conv2d_rejects_3d_layout() {
        assert!(conv2d_reuse_cycles(8, 8, 1, 3, &layout(&[1; 27])).is_err());
    }
}
