//! Depth-oriented output-major search, single-block and block-partitioned.
//!
//! Both searches share one engine. For every block the engine walks depths in
//! order; pass `z` emits the outputs of depth `z` row by row. FIFO I holds the
//! current-depth rows `y, y+1`, FIFO II the next-depth rows `y-1..=y+1`.
//! Next-depth rows leaving the window stay resident in FIFO II and are reused
//! as current-depth rows in the following pass. On overflow FIFO II evicts the
//! voxels needed furthest ahead, so a FIFO II that holds a whole depth reads
//! each voxel once and a small one reads it twice.
//!
//! In partitioned mode each block's backup store holds copies of the voxels in
//! the first column of the block to its right, loaded per pass for both depths. Copies search only the `dx = -1`
//! half offsets, and own voxels on a block's left edge drop those offsets, so
//! every pair is found exactly once. Rows across a y boundary are fetched from
//! the neighbor blocks through their depth tables into the backup buffer.

use super::sorter::MergeSorter;
use super::table::block_streams;
use super::{
    build_depth_table, check_same_coords, expand_symmetric, AccessStats, BlockPartition, BufferConfig,
    DepthEncodingTable, InOutMap, MapEntry, SearchError,
};
use crate::tensor::{half_offsets, ConvVariant, KernelOffset, KernelSpec, TensorError, VoxelCoord, VoxelSource};

/// Single-block search. `table` must be the `(1, 1)` table of `input`.
pub fn doms_search(
    input: &impl VoxelSource,
    outputs: &impl VoxelSource,
    spec: &KernelSpec,
    buf: &BufferConfig,
    table: &DepthEncodingTable,
) -> Result<(InOutMap, AccessStats), SearchError> {
    check_kernel(spec)?;
    check_same_coords(input, outputs)?;
    if table.block_grid() != (1, 1) || *table != build_depth_table(input, (1, 1))? {
        return Err(SearchError::TableMismatch);
    }
    Engine::new(input, spec, buf, table)?.run()
}

/// Block-partitioned search over an `m × n` split of the `(x, y)` plane.
pub fn block_doms_search(
    input: &impl VoxelSource,
    outputs: &impl VoxelSource,
    spec: &KernelSpec,
    buf: &BufferConfig,
    block_grid: (usize, usize),
) -> Result<(InOutMap, AccessStats), SearchError> {
    check_kernel(spec)?;
    check_same_coords(input, outputs)?;
    let table = build_depth_table(input, block_grid)?;
    Engine::new(input, spec, buf, &table)?.run()
}

fn check_kernel(spec: &KernelSpec) -> Result<(), SearchError> {
    if spec.variant() != ConvVariant::Submanifold {
        return Err(TensorError::UnsupportedVariant(spec.variant()).into());
    }
    if spec.size() != 3 {
        return Err(SearchError::UnsupportedKernel(*spec));
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Item {
    coord: VoxelCoord,
    global: u32,
    copy: bool,
}

/// One row of a block depth. Own voxels occupy `start..own_end`, copies `own_end..end`.
#[derive(Clone, Copy)]
struct Row {
    y: i32,
    start: usize,
    own_end: usize,
    end: usize,
}

impl Row {
    /// Own voxels; these stream through the FIFOs.
    fn len(&self) -> usize {
        self.own_end - self.start
    }

    fn outputs(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Default)]
struct Depth {
    items: Vec<Item>,
    rows: Vec<Row>,
    copies: usize,
}

impl Depth {
    fn row_items(&self, r: &Row) -> &[Item] {
        &self.items[r.start..r.end]
    }

    fn own_row(&self, y: i32) -> &[Item] {
        match self.rows.binary_search_by_key(&y, |r| r.y) {
            Ok(k) => &self.items[self.rows[k].start..self.rows[k].own_end],
            Err(_) => &[],
        }
    }
}

struct Engine<'a> {
    part: &'a BlockPartition,
    buf: BufferConfig,
    nz: usize,
    /// `depths[block_id][z]`
    depths: Vec<Vec<Depth>>,
    half: Vec<KernelOffset>,
    half_idx: Vec<u16>,
    center: u16,
    shape: crate::tensor::GridShape,
    stats: AccessStats,
    entries: Vec<MapEntry>,
    sorter: MergeSorter,
    spec: KernelSpec,
}

/// Traffic bookkeeping for one output row.
struct RowLoad {
    reads: u64,
    occupancy: u64,
}

impl<'a> Engine<'a> {
    fn new(
        input: &impl VoxelSource,
        spec: &KernelSpec,
        buf: &BufferConfig,
        table: &'a DepthEncodingTable,
    ) -> Result<Self, SearchError> {
        let part = table.partition();
        let coords = input.coords();
        let nz = input.shape().nz() as usize;
        let streams = block_streams(input, part);
        let (m, n) = (part.m(), part.n());
        let mut depths: Vec<Vec<Depth>> = Vec::with_capacity(part.block_count());
        let mut replicated = 0u64;
        for j in 0..n {
            for i in 0..m {
                let own_stream = &streams[part.block_id(i, j)];
                let mut per_depth = Vec::with_capacity(nz);
                for z in 0..nz {
                    let e = table.entry(i, j, z);
                    let own = own_stream
                        .get(e.start as usize..(e.start + e.count) as usize)
                        .ok_or(SearchError::TableMismatch)?;
                    let mut items: Vec<Item> =
                        own.iter().map(|&g| Item { coord: coords[g as usize], global: g, copy: false }).collect();
                    if items.iter().any(|it| it.coord.z as usize != z) {
                        return Err(SearchError::TableMismatch);
                    }
                    if i + 1 < m {
                        let x_edge = part.x_range(i + 1).0;
                        let e2 = table.entry(i + 1, j, z);
                        let right =
                            &streams[part.block_id(i + 1, j)][e2.start as usize..(e2.start + e2.count) as usize];
                        let before = items.len();
                        items.extend(right.iter().filter(|&&g| coords[g as usize].x == x_edge).map(|&g| Item {
                            coord: coords[g as usize],
                            global: g,
                            copy: true,
                        }));
                        replicated += (items.len() - before) as u64;
                        // copies sit at the largest x of every row
                        items.sort_by_key(|it| it.coord);
                    }
                    let copies = items.iter().filter(|it| it.copy).count();
                    per_depth.push(Depth { rows: group_rows(&items), items, copies });
                }
                depths.push(per_depth);
            }
        }
        let half = half_offsets(spec)?;
        let half_idx = half.iter().map(|d| spec.offset_index(*d).expect("half offset") as u16).collect();
        let mut stats = AccessStats::new(coords.len());
        stats.replicated_voxels = replicated;
        stats.table_size_entries = table.size_entries();
        Ok(Self {
            part,
            buf: *buf,
            nz,
            depths,
            half,
            half_idx,
            center: spec.center_index().expect("odd kernel") as u16,
            shape: input.shape(),
            stats,
            entries: Vec::with_capacity(coords.len() * 14),
            sorter: MergeSorter::new(buf.sorter_len()),
            spec: *spec,
        })
    }

    fn run(mut self) -> Result<(InOutMap, AccessStats), SearchError> {
        let depths = std::mem::take(&mut self.depths);
        for j in 0..self.part.n() {
            for i in 0..self.part.m() {
                self.run_block(&depths, i, j);
            }
        }
        self.stats.sorter_invocations = self.sorter.invocations();
        let half = InOutMap::from_entries(std::mem::take(&mut self.entries))?;
        let map = expand_symmetric(&half, &self.spec)?;
        Ok((map, self.stats.finish()))
    }

    fn run_block(&mut self, depths: &[Vec<Depth>], i: usize, j: usize) {
        let b = self.part.block_id(i, j);
        let c1 = self.buf.fifo_capacity_i() as u64;
        let c2 = self.buf.fifo_capacity_ii() as u64;
        let cb = self.buf.backup_capacity() as u64;
        // per-row counts of the next pass's current depth still resident in FIFO II
        let mut carried: Option<(usize, Vec<usize>)> = None;

        for z in 0..self.nz {
            self.stats.table_reads += 1;
            let cur_depth = &depths[b][z];
            if cur_depth.rows.is_empty() {
                carried = None;
                continue;
            }
            let empty = Depth::default();
            let nxt_depth = if z + 1 < self.nz {
                self.stats.table_reads += 1;
                &depths[b][z + 1]
            } else {
                &empty
            };
            let cur = &cur_depth.rows;
            let nxt = &nxt_depth.rows;
            let nxt_pre = prefix_lens(nxt);

            let mut res_cur = match carried.take() {
                Some((depth, counts)) if depth == z => counts,
                _ => vec![0; cur.len()],
            };
            let mut res_nxt = vec![0usize; nxt.len()];
            // resident totals: current rows from `k` on, and retained next rows
            let mut cur_total: u64 = res_cur.iter().sum::<usize>() as u64;
            let mut nxt_total: u64 = 0;
            let mut fetched = 0usize;
            let (mut ni, mut ne) = (0usize, 0usize);
            // border copies of both depths sit in the backup store for the whole pass
            let copies = (cur_depth.copies + nxt_depth.copies) as u64;
            let mut reads = copies;
            let mut candidates: Vec<(VoxelCoord, u32)> = Vec::new();

            for k in 0..cur.len() {
                let y = cur[k].y;
                if k > 0 {
                    cur_total -= res_cur[k - 1] as u64;
                }
                // FIFO II streams the next depth sequentially; rows leaving the
                // window are kept for the next pass
                while ni < nxt.len() && nxt[ni].y <= y + 1 {
                    reads += nxt[ni].len() as u64;
                    ni += 1;
                }
                while ne < ni && nxt[ne].y < y - 1 {
                    res_nxt[ne] = nxt[ne].len();
                    nxt_total += nxt[ne].len() as u64;
                    ne += 1;
                }
                // FIFO I: current rows y and y+1, minus what FIFO II still holds
                let need_hi = if k + 1 < cur.len() && cur[k + 1].y == y + 1 { k + 2 } else { k + 1 };
                while fetched < need_hi {
                    reads += (cur[fetched].len() - res_cur[fetched]) as u64;
                    fetched += 1;
                }

                let n_out = cur[k].outputs() as u64;
                let window2 = (nxt_pre[ni] - nxt_pre[ne]) as u64;
                let mut occ2 = cur_total + nxt_total + window2;
                // evict whatever is needed furthest ahead: retained next rows
                // from the top, then current rows from the top
                let mut r = ne;
                while occ2 > c2 && r > 0 {
                    r -= 1;
                    let drop = (occ2 - c2).min(res_nxt[r] as u64);
                    res_nxt[r] -= drop as usize;
                    nxt_total -= drop;
                    occ2 -= drop;
                }
                let mut r = cur.len();
                while occ2 > c2 && r > k {
                    r -= 1;
                    let drop = (occ2 - c2).min(res_cur[r] as u64);
                    res_cur[r] -= drop as usize;
                    cur_total -= drop;
                    occ2 -= drop;
                    if r < fetched {
                        // already in use: refetch into FIFO I
                        reads += drop;
                    }
                }
                if occ2 > c2 {
                    reads += (n_out - 1) * (occ2 - c2);
                }
                let occ1: u64 = (k..need_hi).map(|r| (cur[r].len() - res_cur[r]) as u64).sum();
                if occ1 > c1 {
                    reads += (n_out - 1) * (occ1 - c1);
                }

                candidates.clear();
                for r in &cur[k..need_hi] {
                    candidates.extend(cur_depth.row_items(r).iter().map(|it| (it.coord, it.global)));
                }
                for r in &nxt[ne..ni] {
                    candidates.extend(nxt_depth.row_items(r).iter().map(|it| (it.coord, it.global)));
                }
                let load = self.search_row(depths, i, j, z, cur_depth.row_items(&cur[k]), &mut candidates);
                reads += load.reads;
                let backup = copies + load.occupancy;
                if backup > cb {
                    reads += (n_out - 1) * (backup - cb);
                }
                let occupancy = occ1.min(c1) + occ2.min(c2) + backup.min(cb);
                self.stats.peak_fifo_occupancy = self.stats.peak_fifo_occupancy.max(occupancy);
            }

            // rows still in the window at the end of the pass stay resident too
            res_nxt[ne..ni].iter_mut().zip(&nxt[ne..ni]).for_each(|(c, r)| *c = r.len());
            carried = Some((z + 1, res_nxt));
            self.stats.offchip_coord_reads += reads;
        }
    }

    /// Searches every output of one row; returns the neighbor-row traffic.
    fn search_row(
        &mut self,
        depths: &[Vec<Depth>],
        i: usize,
        j: usize,
        z: usize,
        outputs: &[Item],
        candidates: &mut Vec<(VoxelCoord, u32)>,
    ) -> RowLoad {
        let part = self.part;
        let (m, n) = (part.m(), part.n());
        let (x_lo, x_hi) = part.x_range(i);
        let (y_lo, y_hi) = part.y_range(j);
        let base = candidates.len();
        let mut loaded: Vec<(usize, usize, i32)> = Vec::new();
        let mut load = RowLoad { reads: 0, occupancy: 0 };
        let mut queries: Vec<(VoxelCoord, u32)> = Vec::with_capacity(self.half.len());
        let mut segs: Vec<(usize, usize, i32)> = Vec::new();

        for out in outputs {
            let q = out.coord;
            queries.clear();
            for (k, d) in self.half.iter().enumerate() {
                let keep = if out.copy { d.dx == -1 } else { !(d.dx == -1 && i > 0 && q.x == x_lo) };
                let p = d.apply(q);
                if keep && self.shape.contains(&p) {
                    queries.push((p, k as u32));
                }
            }
            if !out.copy {
                self.entries.push(MapEntry::new(out.global, out.global, self.center));
            }

            // neighbor-block rows across the y boundaries
            candidates.truncate(base);
            segs.clear();
            let cols: [Option<usize>; 3] = if out.copy {
                [Some(i), None, None]
            } else {
                [(i > 0 && q.x == x_lo).then(|| i - 1), Some(i), (i + 1 < m && q.x == x_hi - 1).then_some(i + 1)]
            };
            for col in cols.into_iter().flatten() {
                if q.y == y_lo && j > 0 {
                    segs.push((part.block_id(col, j - 1), z, q.y - 1));
                    if z + 1 < self.nz {
                        segs.push((part.block_id(col, j - 1), z + 1, q.y - 1));
                    }
                }
                if q.y == y_hi - 1 && j + 1 < n {
                    segs.push((part.block_id(col, j + 1), z, q.y + 1));
                    if z + 1 < self.nz {
                        segs.push((part.block_id(col, j + 1), z + 1, q.y + 1));
                    }
                }
            }
            for &seg in &segs {
                let (nb, d, yy) = seg;
                let row = depths[nb][d].own_row(yy);
                if !loaded.contains(&seg) {
                    loaded.push(seg);
                    self.stats.table_reads += 1;
                    load.reads += row.len() as u64;
                    load.occupancy += row.len() as u64;
                }
                candidates.extend(row.iter().map(|it| (it.coord, it.global)));
            }

            let out_global = out.global;
            let half_idx = &self.half_idx;
            let entries = &mut self.entries;
            self.sorter.intersect(&queries, candidates, |qk, input| {
                entries.push(MapEntry::new(input, out_global, half_idx[qk as usize]));
            });
        }
        candidates.truncate(base);
        load
    }
}

fn group_rows(items: &[Item]) -> Vec<Row> {
    let mut rows: Vec<Row> = Vec::new();
    for (k, it) in items.iter().enumerate() {
        match rows.last_mut() {
            Some(r) if r.y == it.coord.y => r.end = k + 1,
            _ => rows.push(Row { y: it.coord.y, start: k, own_end: k, end: k + 1 }),
        }
        if !it.copy {
            rows.last_mut().unwrap().own_end = k + 1;
        }
    }
    rows
}

fn prefix_lens(rows: &[Row]) -> Vec<usize> {
    let mut pre = Vec::with_capacity(rows.len() + 1);
    pre.push(0);
    for r in rows {
        pre.push(pre.last().unwrap() + r.len());
    }
    pre
}
