use std::collections::BTreeSet;

use proptest::prelude::*;
use spvox::tensor::{
    canonical_sort, derive_output_coords, half_offsets, io, kernel_offsets, CoordSet, GridShape, KernelSpec,
    SparseTensor, VoxelCoord,
};

fn coords_in(n: u32, max: usize) -> impl Strategy<Value = Vec<VoxelCoord>> {
    prop::collection::vec((0..n as i32, 0..n as i32, 0..n as i32), 0..max)
        .prop_map(|v| v.into_iter().map(|(x, y, z)| VoxelCoord::new(x, y, z)).collect())
}

fn set_of(n: u32, coords: Vec<VoxelCoord>) -> CoordSet {
    let uniq: BTreeSet<_> = coords.into_iter().map(|c| (c.z, c.y, c.x)).collect();
    CoordSet::new(GridShape::cube(n), uniq.into_iter().map(|(z, y, x)| VoxelCoord::new(x, y, z)).collect()).unwrap()
}

#[test]
fn offset_counts_and_half_partition() {
    for k in [1u32, 3, 5] {
        let spec = KernelSpec::subm(k);
        let all = kernel_offsets(&spec);
        let half = half_offsets(&spec).unwrap();
        assert_eq!(all.len() as u32, k * k * k);
        assert_eq!(half.len() as u32, (k * k * k - 1) / 2);
        let mut seen = BTreeSet::new();
        for d in &half {
            assert!(!half.contains(&-*d));
            assert!(all.contains(d) && all.contains(&-*d));
            seen.insert(*d);
            seen.insert(-*d);
        }
        assert_eq!(seen.len() + 1, all.len());
    }
}

proptest! {
    #[test]
    fn generalized_outputs_match_window_scan(coords in coords_in(12, 80), k in 2u32..4, s in 1u32..4) {
        let input = set_of(12, coords);
        let spec = KernelSpec::generalized(k, s);
        let out = derive_output_coords(&input, &spec, None).unwrap();
        // every output window, scanned directly
        let oshape = input.shape().downsampled(s);
        let (lo, hi) = spec.offset_range();
        let mut want = Vec::new();
        for q in (0..oshape.volume() as usize).map(|i| oshape.coord_of(i)) {
            let hit = input.coords().iter().any(|p| {
                let (bx, by, bz) = (q.x * s as i32, q.y * s as i32, q.z * s as i32);
                (bx + lo..=bx + hi).contains(&p.x) && (by + lo..=by + hi).contains(&p.y) && (bz + lo..=bz + hi).contains(&p.z)
            });
            if hit {
                want.push(q);
            }
        }
        prop_assert_eq!(out.coords(), want.as_slice());
    }

    #[test]
    fn canonical_sort_is_idempotent_bijection(coords in coords_in(16, 60)) {
        let uniq: Vec<_> = coords.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let mut shuffled = uniq.clone();
        shuffled.reverse();
        let (sorted, perm) = canonical_sort(&shuffled).unwrap();
        let mut p = perm.clone();
        p.sort_unstable();
        prop_assert_eq!(p, (0..shuffled.len()).collect::<Vec<_>>());
        for (k, &src) in perm.iter().enumerate() {
            prop_assert_eq!(sorted[k], shuffled[src]);
        }
        let (again, ident) = canonical_sort(&sorted).unwrap();
        prop_assert_eq!(&again, &sorted);
        prop_assert_eq!(ident, (0..sorted.len()).collect::<Vec<_>>());
        prop_assert!(sorted.windows(2).all(|w| (w[0].z, w[0].y, w[0].x) < (w[1].z, w[1].y, w[1].x)));
    }

    #[test]
    fn serialization_round_trips(coords in coords_in(10, 40), ch in 1usize..4, seed in any::<u64>()) {
        let set = set_of(10, coords);
        let feats: Vec<f64> = (0..set.len() * ch).map(|i| ((i as u64 ^ seed) % 1000) as f64 / 7.0 - 50.0).collect();
        let t = SparseTensor::new(set.shape(), ch, set.coords().to_vec(), feats).unwrap();
        prop_assert_eq!(&io::from_json(&io::to_json(&t)).unwrap(), &t);
        let mut bin = Vec::new();
        io::write_binary(&t, &mut bin).unwrap();
        prop_assert_eq!(&io::read_binary(bin.as_slice()).unwrap(), &t);
    }
}
