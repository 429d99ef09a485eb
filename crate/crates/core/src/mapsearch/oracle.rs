use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use super::{InOutMap, MapEntry};
use crate::tensor::{kernel_offsets, source_coord, KernelSpec, VoxelCoord, VoxelSource};

/// Multiplicative hasher for packed integer coordinates.
#[derive(Default)]
pub(crate) struct CoordHasher(u64);

impl Hasher for CoordHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_i32(&mut self, v: i32) {
        self.write_u64(v as u32 as u64);
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
}

pub(crate) type CoordIndex = HashMap<VoxelCoord, u32, BuildHasherDefault<CoordHasher>>;

pub(crate) fn coord_index(coords: &[VoxelCoord]) -> CoordIndex {
    let mut idx = CoordIndex::with_capacity_and_hasher(coords.len(), Default::default());
    for (i, c) in coords.iter().enumerate() {
        idx.insert(*c, i as u32);
    }
    idx
}

/// Exact IN-OUT map by hashing every input and probing all `K³` offsets of every output.
pub fn oracle_search(input: &impl VoxelSource, outputs: &impl VoxelSource, spec: &KernelSpec) -> InOutMap {
    let index = coord_index(input.coords());
    let offsets = kernel_offsets(spec);
    let mut entries = Vec::new();
    for (j, &q) in outputs.coords().iter().enumerate() {
        for (o, &d) in offsets.iter().enumerate() {
            if let Some(i) = source_coord(spec, q, d).and_then(|p| index.get(&p)) {
                entries.push(MapEntry::new(*i, j as u32, o as u16));
            }
        }
    }
    InOutMap::from_entries(entries).expect("hash probes cannot repeat a triple")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{derive_output_coords, CoordSet, GridShape, KernelOffset};

    fn set(v: &[(i32, i32, i32)]) -> CoordSet {
        CoordSet::from_unsorted(GridShape::cube(8), v.iter().map(|&(x, y, z)| VoxelCoord::new(x, y, z)).collect())
            .unwrap()
    }

    #[test]
    fn isolated_voxel_maps_to_itself() {
        let s = set(&[(2, 2, 2)]);
        let m = oracle_search(&s, &s, &KernelSpec::subm(3));
        assert_eq!(m.entries(), &[MapEntry::new(0, 0, 13)]);
    }

    #[test]
    fn two_neighbors() {
        let s = set(&[(0, 0, 0), (1, 0, 0)]);
        let spec = KernelSpec::subm(3);
        let m = oracle_search(&s, &s, &spec);
        let px = spec.offset_index(KernelOffset::new(1, 0, 0)).unwrap() as u16;
        let nx = spec.offset_index(KernelOffset::new(-1, 0, 0)).unwrap() as u16;
        let mut expected =
            [MapEntry::new(0, 0, 13), MapEntry::new(1, 1, 13), MapEntry::new(1, 0, px), MapEntry::new(0, 1, nx)];
        expected.sort();
        assert_eq!(m.entries(), &expected[..]);
    }

    #[test]
    fn empty_is_empty() {
        let s = CoordSet::empty(GridShape::cube(4));
        assert!(oracle_search(&s, &s, &KernelSpec::subm(3)).is_empty());
    }

    #[test]
    fn gconv_every_input_used_once() {
        let s = set(&[(0, 0, 0), (1, 1, 1), (2, 3, 4), (7, 7, 7)]);
        let spec = KernelSpec::generalized(2, 2);
        let out = derive_output_coords(&s, &spec, None).unwrap();
        let m = oracle_search(&s, &out, &spec);
        assert_eq!(m.len(), s.len());
    }
}
