use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TensorError;

/// Integer voxel index on the quantized grid.
///
/// Ordering is canonical: `(z, y, x)` lexicographic, so every depth is a
/// contiguous slice of a sorted stream and every row inside it a contiguous run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct VoxelCoord {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VoxelCoord {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn key(&self) -> (i32, i32, i32) {
        (self.z, self.y, self.x)
    }

    #[inline]
    pub fn offset(&self, dx: i32, dy: i32, dz: i32) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }
}

impl Ord for VoxelCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for VoxelCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for VoxelCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Voxel counts per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct GridShape {
    nx: u32,
    ny: u32,
    nz: u32,
}

impl GridShape {
    pub fn new(nx: u32, ny: u32, nz: u32) -> Result<Self, TensorError> {
        let max = i32::MAX as u32;
        if nx == 0 || ny == 0 || nz == 0 || nx > max || ny > max || nz > max {
            return Err(TensorError::InvalidShape { nx, ny, nz });
        }
        (nx as u64)
            .checked_mul(ny as u64)
            .and_then(|v| v.checked_mul(nz as u64))
            .filter(|&v| v <= usize::MAX as u64)
            .ok_or(TensorError::InvalidShape { nx, ny, nz })?;
        Ok(Self { nx, ny, nz })
    }

    /// Cube grid, panics on zero.
    pub fn cube(n: u32) -> Self {
        Self::new(n, n, n).expect("cube dimension must be positive")
    }

    pub fn nx(&self) -> u32 {
        self.nx
    }
    pub fn ny(&self) -> u32 {
        self.ny
    }
    pub fn nz(&self) -> u32 {
        self.nz
    }

    pub fn volume(&self) -> u64 {
        self.nx as u64 * self.ny as u64 * self.nz as u64
    }

    pub fn contains(&self, c: &VoxelCoord) -> bool {
        c.x >= 0 && c.y >= 0 && c.z >= 0 && (c.x as u32) < self.nx && (c.y as u32) < self.ny && (c.z as u32) < self.nz
    }

    /// Row-major index in canonical `(z, y, x)` order. Caller guarantees containment.
    #[inline]
    pub fn linear_index(&self, c: &VoxelCoord) -> usize {
        (c.z as usize * self.ny as usize + c.y as usize) * self.nx as usize + c.x as usize
    }

    #[inline]
    pub fn coord_of(&self, idx: usize) -> VoxelCoord {
        let nx = self.nx as usize;
        let ny = self.ny as usize;
        VoxelCoord::new((idx % nx) as i32, ((idx / nx) % ny) as i32, (idx / (nx * ny)) as i32)
    }

    /// Shape after a stride-`s` downsample: `ceil(n / s)` per axis.
    pub fn downsampled(&self, stride: u32) -> Self {
        let d = |n: u32| n.div_ceil(stride.max(1));
        Self { nx: d(self.nx), ny: d(self.ny), nz: d(self.nz) }
    }
}

impl TryFrom<[u32; 3]> for GridShape {
    type Error = TensorError;
    fn try_from(v: [u32; 3]) -> Result<Self, Self::Error> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<GridShape> for [u32; 3] {
    fn from(s: GridShape) -> Self {
        [s.nx, s.ny, s.nz]
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// A canonical (sorted, duplicate-free) coordinate list on a grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordSet {
    shape: GridShape,
    coords: Vec<VoxelCoord>,
}

impl CoordSet {
    pub fn new(shape: GridShape, coords: Vec<VoxelCoord>) -> Result<Self, TensorError> {
        check_canonical(&coords)?;
        if let Some(c) = coords.iter().find(|c| !shape.contains(c)) {
            return Err(TensorError::OutOfBounds { coord: *c, shape });
        }
        Ok(Self { shape, coords })
    }

    /// Sorts and validates an arbitrary list.
    pub fn from_unsorted(shape: GridShape, coords: Vec<VoxelCoord>) -> Result<Self, TensorError> {
        let (sorted, _) = canonical_sort(&coords)?;
        Self::new(shape, sorted)
    }

    pub fn empty(shape: GridShape) -> Self {
        Self { shape, coords: Vec::new() }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }
    pub fn coords(&self) -> &[VoxelCoord] {
        &self.coords
    }
    pub fn len(&self) -> usize {
        self.coords.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    pub fn into_coords(self) -> Vec<VoxelCoord> {
        self.coords
    }

    pub fn position(&self, c: &VoxelCoord) -> Option<usize> {
        self.coords.binary_search(c).ok()
    }
}

pub(crate) fn check_canonical(coords: &[VoxelCoord]) -> Result<(), TensorError> {
    for w in coords.windows(2) {
        match w[0].cmp(&w[1]) {
            Ordering::Less => {}
            Ordering::Equal => return Err(TensorError::DuplicateVoxel(w[0])),
            Ordering::Greater => return Err(TensorError::NotCanonical { at: w[1] }),
        }
    }
    Ok(())
}

/// Sorts coordinates into canonical `(z, y, x)` order.
///
/// Returns the sorted list and a permutation `perm` with `sorted[perm[i]] == coords[i]`.
pub fn canonical_sort(coords: &[VoxelCoord]) -> Result<(Vec<VoxelCoord>, Vec<usize>), TensorError> {
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_unstable_by(|&a, &b| coords[a].cmp(&coords[b]));
    let mut perm = vec![0usize; coords.len()];
    let mut sorted = Vec::with_capacity(coords.len());
    for (new_idx, &old_idx) in order.iter().enumerate() {
        if let Some(prev) = sorted.last() {
            if *prev == coords[old_idx] {
                return Err(TensorError::DuplicateVoxel(coords[old_idx]));
            }
        }
        sorted.push(coords[old_idx]);
        perm[old_idx] = new_idx;
    }
    Ok((sorted, perm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_two_elements() {
        let (s, perm) = canonical_sort(&[VoxelCoord::new(1, 0, 0), VoxelCoord::new(0, 0, 0)]).unwrap();
        assert_eq!(s, vec![VoxelCoord::new(0, 0, 0), VoxelCoord::new(1, 0, 0)]);
        assert_eq!(perm, vec![1, 0]);
    }

    #[test]
    fn empty_sort() {
        let (s, p) = canonical_sort(&[]).unwrap();
        assert!(s.is_empty() && p.is_empty());
    }

    #[test]
    fn duplicate_is_named() {
        let c = VoxelCoord::new(3, 2, 1);
        match canonical_sort(&[c, VoxelCoord::new(0, 0, 0), c]) {
            Err(TensorError::DuplicateVoxel(d)) => assert_eq!(d, c),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn z_is_most_significant() {
        let a = VoxelCoord::new(5, 5, 0);
        let b = VoxelCoord::new(0, 0, 1);
        let c = VoxelCoord::new(9, 0, 1);
        assert!(a < b && b < c);
    }

    #[test]
    fn shape_rejects_zero_and_huge() {
        assert!(GridShape::new(0, 1, 1).is_err());
        assert!(GridShape::new(1, 1, 1 << 31).is_err());
        assert!(GridShape::new(352, 400, 10).is_ok());
    }

    #[test]
    fn linear_index_roundtrip() {
        let s = GridShape::new(7, 5, 3).unwrap();
        for i in 0..s.volume() as usize {
            assert_eq!(s.linear_index(&s.coord_of(i)), i);
        }
    }
}
