use serde::{Deserialize, Serialize};

use super::coord::check_canonical;
use super::{
    canonical_sort, kernel_offsets, ConvVariant, CoordSet, GridShape, KernelOffset, KernelSpec, TensorError, VoxelCoord,
};

/// Sorted voxel coordinates with one feature row per voxel (row-major `N × C`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseTensor {
    shape: GridShape,
    channels: usize,
    coords: Vec<VoxelCoord>,
    features: Vec<f64>,
}

impl SparseTensor {
    /// Builds a tensor from coordinates already in canonical order.
    pub fn new(
        shape: GridShape,
        channels: usize,
        coords: Vec<VoxelCoord>,
        features: Vec<f64>,
    ) -> Result<Self, TensorError> {
        if channels == 0 {
            return Err(TensorError::ZeroChannels);
        }
        if features.len() != coords.len() * channels {
            return Err(TensorError::FeatureRows { expected: coords.len() * channels, got: features.len() });
        }
        check_canonical(&coords)?;
        if let Some(c) = coords.iter().find(|c| !shape.contains(c)) {
            return Err(TensorError::OutOfBounds { coord: *c, shape });
        }
        Ok(Self { shape, channels, coords, features })
    }

    /// Sorts coordinates (carrying their feature rows along) before building.
    pub fn from_unsorted(
        shape: GridShape,
        channels: usize,
        coords: Vec<VoxelCoord>,
        features: Vec<f64>,
    ) -> Result<Self, TensorError> {
        if channels == 0 {
            return Err(TensorError::ZeroChannels);
        }
        if features.len() != coords.len() * channels {
            return Err(TensorError::FeatureRows { expected: coords.len() * channels, got: features.len() });
        }
        let (sorted, perm) = canonical_sort(&coords)?;
        let mut feats = vec![0.0; features.len()];
        for (old, &new) in perm.iter().enumerate() {
            feats[new * channels..(new + 1) * channels]
                .copy_from_slice(&features[old * channels..(old + 1) * channels]);
        }
        Self::new(shape, channels, sorted, feats)
    }

    /// Single-channel tensor whose features are all `1.0`.
    pub fn occupancy(set: CoordSet) -> Self {
        let n = set.len();
        let shape = set.shape();
        Self { shape, channels: 1, coords: set.into_coords(), features: vec![1.0; n] }
    }

    pub fn empty(shape: GridShape, channels: usize) -> Self {
        Self { shape, channels: channels.max(1), coords: Vec::new(), features: Vec::new() }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn coords(&self) -> &[VoxelCoord] {
        &self.coords
    }
    pub fn features(&self) -> &[f64] {
        &self.features
    }
    pub fn len(&self) -> usize {
        self.coords.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.channels..(i + 1) * self.channels]
    }

    pub fn coord_set(&self) -> CoordSet {
        CoordSet::new(self.shape, self.coords.clone()).expect("tensor coordinates are canonical")
    }

    /// Same coordinates, new features.
    pub fn with_features(&self, channels: usize, features: Vec<f64>) -> Result<Self, TensorError> {
        Self::new(self.shape, channels, self.coords.clone(), features)
    }
}

/// Input coordinate paired with output `out` through offset `delta`.
///
/// Submanifold: `out + δ`. Generalized: `out·s + δ`. Transposed is the inverse of
/// generalized, so the input is `(out − δ) / s` when that division is exact.
#[inline]
pub fn source_coord(spec: &KernelSpec, out: VoxelCoord, delta: KernelOffset) -> Option<VoxelCoord> {
    let s = spec.stride() as i32;
    match spec.variant() {
        ConvVariant::Submanifold => Some(delta.apply(out)),
        ConvVariant::Generalized => {
            Some(VoxelCoord::new(out.x * s + delta.dx, out.y * s + delta.dy, out.z * s + delta.dz))
        }
        ConvVariant::Transposed => {
            let (x, y, z) = (out.x - delta.dx, out.y - delta.dy, out.z - delta.dz);
            if x.rem_euclid(s) == 0 && y.rem_euclid(s) == 0 && z.rem_euclid(s) == 0 {
                Some(VoxelCoord::new(x.div_euclid(s), y.div_euclid(s), z.div_euclid(s)))
            } else {
                None
            }
        }
    }
}

/// Output coordinate set for a convolution applied to `input`.
///
/// `targets` is the saved pre-downsample coordinate set and is required for
/// transposed convolutions; other variants ignore it.
pub fn derive_output_coords(
    input: &CoordSet,
    spec: &KernelSpec,
    targets: Option<&CoordSet>,
) -> Result<CoordSet, TensorError> {
    match spec.variant() {
        ConvVariant::Submanifold => Ok(input.clone()),
        ConvVariant::Generalized => {
            let out_shape = input.shape().downsampled(spec.stride());
            let s = spec.stride() as i32;
            let offsets = kernel_offsets(spec);
            let mut out = Vec::new();
            for p in input.coords() {
                for d in &offsets {
                    let (x, y, z) = (p.x - d.dx, p.y - d.dy, p.z - d.dz);
                    if x.rem_euclid(s) != 0 || y.rem_euclid(s) != 0 || z.rem_euclid(s) != 0 {
                        continue;
                    }
                    let q = VoxelCoord::new(x.div_euclid(s), y.div_euclid(s), z.div_euclid(s));
                    if out_shape.contains(&q) {
                        out.push(q);
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            CoordSet::new(out_shape, out)
        }
        ConvVariant::Transposed => {
            let targets = targets.ok_or(TensorError::MissingTargets)?;
            let offsets = kernel_offsets(spec);
            let out = targets
                .coords()
                .iter()
                .copied()
                .filter(|&p| {
                    offsets.iter().any(|&d| source_coord(spec, p, d).is_some_and(|q| input.position(&q).is_some()))
                })
                .collect();
            CoordSet::new(targets.shape(), out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(shape: GridShape, v: &[(i32, i32, i32)]) -> CoordSet {
        CoordSet::from_unsorted(shape, v.iter().map(|&(x, y, z)| VoxelCoord::new(x, y, z)).collect()).unwrap()
    }

    #[test]
    fn from_unsorted_carries_features() {
        let t = SparseTensor::from_unsorted(
            GridShape::cube(4),
            2,
            vec![VoxelCoord::new(1, 0, 0), VoxelCoord::new(0, 0, 0)],
            vec![1.0, 2.0, 3.0, 4.0],
        )
        .unwrap();
        assert_eq!(t.feature(0), &[3.0, 4.0]);
        assert_eq!(t.feature(1), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_feature_mismatch_and_bounds() {
        let s = GridShape::cube(2);
        assert!(matches!(
            SparseTensor::new(s, 1, vec![VoxelCoord::new(0, 0, 0)], vec![]),
            Err(TensorError::FeatureRows { .. })
        ));
        assert!(matches!(
            SparseTensor::new(s, 1, vec![VoxelCoord::new(2, 0, 0)], vec![1.0]),
            Err(TensorError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn submanifold_keeps_coords() {
        let s = set(GridShape::cube(8), &[(1, 2, 3), (4, 4, 4)]);
        assert_eq!(derive_output_coords(&s, &KernelSpec::subm(3), None).unwrap(), s);
    }

    #[test]
    fn gconv2_merges_window() {
        let s = set(GridShape::cube(4), &[(0, 0, 0), (1, 1, 1)]);
        let out = derive_output_coords(&s, &KernelSpec::generalized(2, 2), None).unwrap();
        assert_eq!(out.coords(), &[VoxelCoord::new(0, 0, 0)]);
        assert_eq!(out.shape(), GridShape::cube(2));
    }

    #[test]
    fn gconv2_separate_windows() {
        let s = set(GridShape::cube(4), &[(0, 0, 0), (2, 2, 2)]);
        let out = derive_output_coords(&s, &KernelSpec::generalized(2, 2), None).unwrap();
        assert_eq!(out.coords(), &[VoxelCoord::new(0, 0, 0), VoxelCoord::new(1, 1, 1)]);
    }

    #[test]
    fn transposed_needs_targets() {
        let s = set(GridShape::cube(2), &[(0, 0, 0)]);
        assert!(matches!(
            derive_output_coords(&s, &KernelSpec::transposed(2, 2), None),
            Err(TensorError::MissingTargets)
        ));
    }

    #[test]
    fn transposed_restores_targets() {
        let orig = set(GridShape::cube(4), &[(0, 0, 0), (1, 1, 1), (3, 2, 2)]);
        let down = derive_output_coords(&orig, &KernelSpec::generalized(2, 2), None).unwrap();
        let up = derive_output_coords(&down, &KernelSpec::transposed(2, 2), Some(&orig)).unwrap();
        assert_eq!(up, orig);
    }

    #[test]
    fn source_coord_inverts_generalized() {
        let g = KernelSpec::generalized(2, 2);
        let t = KernelSpec::transposed(2, 2);
        let q = VoxelCoord::new(1, 2, 3);
        for d in kernel_offsets(&g) {
            let p = source_coord(&g, q, d).unwrap();
            assert_eq!(source_coord(&t, p, d), Some(q));
        }
    }
}
