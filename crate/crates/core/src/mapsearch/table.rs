use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::tensor::{GridShape, VoxelCoord, VoxelSource};

/// Partition of the `(x, y)` plane into `m × n` blocks (`m` along x, `n` along y).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    shape: GridShape,
    x_bounds: Vec<i32>,
    y_bounds: Vec<i32>,
}

impl BlockPartition {
    pub fn new(shape: GridShape, (m, n): (usize, usize)) -> Result<Self, SearchError> {
        if m == 0 || n == 0 || m > shape.nx() as usize || n > shape.ny() as usize {
            return Err(SearchError::InvalidPartition { m, n, shape });
        }
        let bounds = |parts: usize, dim: u32| -> Vec<i32> {
            (0..=parts).map(|k| ((k as u64 * dim as u64) / parts as u64) as i32).collect()
        };
        Ok(Self { shape, x_bounds: bounds(m, shape.nx()), y_bounds: bounds(n, shape.ny()) })
    }

    pub fn whole(shape: GridShape) -> Self {
        Self::new(shape, (1, 1)).expect("1x1 always fits")
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }
    pub fn m(&self) -> usize {
        self.x_bounds.len() - 1
    }
    pub fn n(&self) -> usize {
        self.y_bounds.len() - 1
    }
    pub fn block_count(&self) -> usize {
        self.m() * self.n()
    }

    /// Half-open x range of block column `i`.
    pub fn x_range(&self, i: usize) -> (i32, i32) {
        (self.x_bounds[i], self.x_bounds[i + 1])
    }
    pub fn y_range(&self, j: usize) -> (i32, i32) {
        (self.y_bounds[j], self.y_bounds[j + 1])
    }

    pub fn column_of(&self, x: i32) -> Option<usize> {
        locate(&self.x_bounds, x)
    }
    pub fn row_of(&self, y: i32) -> Option<usize> {
        locate(&self.y_bounds, y)
    }

    /// Linear block id, `j`-major.
    pub fn block_id(&self, i: usize, j: usize) -> usize {
        j * self.m() + i
    }

    pub fn block_of(&self, c: &VoxelCoord) -> Option<(usize, usize)> {
        Some((self.column_of(c.x)?, self.row_of(c.y)?))
    }
}

fn locate(bounds: &[i32], v: i32) -> Option<usize> {
    if v < bounds[0] || v >= *bounds.last().unwrap() {
        return None;
    }
    Some(bounds.partition_point(|&b| b <= v) - 1)
}

/// Start offset and voxel count of one depth inside a block stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthEntry {
    pub start: u32,
    pub count: u32,
}

/// Per-block depth-encoding tables over the block-reorganized coordinate stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthEncodingTable {
    partition: BlockPartition,
    /// `blocks[block_id][z]`.
    blocks: Vec<Vec<DepthEntry>>,
}

impl DepthEncodingTable {
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn block_grid(&self) -> (usize, usize) {
        (self.partition.m(), self.partition.n())
    }

    pub fn block(&self, i: usize, j: usize) -> &[DepthEntry] {
        &self.blocks[self.partition.block_id(i, j)]
    }

    pub fn entry(&self, i: usize, j: usize, z: usize) -> DepthEntry {
        self.block(i, j)[z]
    }

    /// Total table entries across all blocks.
    pub fn size_entries(&self) -> u64 {
        self.blocks.iter().map(|b| b.len() as u64).sum()
    }

    pub fn block_len(&self, i: usize, j: usize) -> usize {
        self.block(i, j).iter().map(|e| e.count as usize).sum()
    }
}

/// Builds one depth table per block in a single pass over the canonical stream.
pub fn build_depth_table(
    input: &impl VoxelSource,
    block_grid: (usize, usize),
) -> Result<DepthEncodingTable, SearchError> {
    let partition = BlockPartition::new(input.shape(), block_grid)?;
    let nz = input.shape().nz() as usize;
    let mut blocks = vec![vec![DepthEntry::default(); nz]; partition.block_count()];
    for c in input.coords() {
        let (i, j) = partition.block_of(c).ok_or(SearchError::TableMismatch)?;
        blocks[partition.block_id(i, j)][c.z as usize].count += 1;
    }
    for block in &mut blocks {
        let mut start = 0u32;
        for e in block.iter_mut() {
            e.start = start;
            start += e.count;
        }
    }
    Ok(DepthEncodingTable { partition, blocks })
}

/// The reorganized per-block streams: global indices of each block's voxels
/// in canonical order.
pub fn block_streams(input: &impl VoxelSource, partition: &BlockPartition) -> Vec<Vec<u32>> {
    let mut streams = vec![Vec::new(); partition.block_count()];
    for (idx, c) in input.coords().iter().enumerate() {
        if let Some((i, j)) = partition.block_of(c) {
            streams[partition.block_id(i, j)].push(idx as u32);
        }
    }
    streams
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::CoordSet;

    #[test]
    fn single_block_table_by_scan() {
        let set = CoordSet::from_unsorted(
            GridShape::cube(4),
            vec![VoxelCoord::new(0, 0, 0), VoxelCoord::new(1, 0, 0), VoxelCoord::new(0, 0, 2)],
        )
        .unwrap();
        let t = build_depth_table(&set, (1, 1)).unwrap();
        assert_eq!(t.entry(0, 0, 0), DepthEntry { start: 0, count: 2 });
        assert_eq!(t.entry(0, 0, 1), DepthEntry { start: 2, count: 0 });
        assert_eq!(t.entry(0, 0, 2), DepthEntry { start: 2, count: 1 });
        assert_eq!(t.size_entries(), 4);
    }

    #[test]
    fn empty_tensor_zero_counts() {
        let t = build_depth_table(&CoordSet::empty(GridShape::cube(3)), (1, 1)).unwrap();
        assert!(t.block(0, 0).iter().all(|e| e.count == 0 && e.start == 0));
    }

    #[test]
    fn partition_bounds() {
        let p = BlockPartition::new(GridShape::new(10, 16, 1).unwrap(), (3, 8)).unwrap();
        assert_eq!(p.x_range(0), (0, 3));
        assert_eq!(p.x_range(2), (6, 10));
        assert_eq!(p.column_of(5), Some(1));
        assert_eq!(p.column_of(10), None);
        assert_eq!(p.row_of(15), Some(7));
        assert!(BlockPartition::new(GridShape::new(2, 2, 2).unwrap(), (3, 1)).is_err());
        assert!(BlockPartition::new(GridShape::new(2, 2, 2).unwrap(), (0, 1)).is_err());
    }
}
