use super::weights::{quantize_symmetric, WeightData};
use super::{SpconvError, WeightTensor};
use crate::tensor::{
    derive_output_coords, kernel_offsets, ConvVariant, CoordSet, GridShape, KernelSpec, SparseTensor, VoxelCoord,
};

/// Largest grid the dense oracle will allocate.
pub const DENSE_ORACLE_MAX_VOXELS: u64 = 1 << 24;

/// A dense feature volume with the variant's output-coordinate mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVolume {
    pub shape: GridShape,
    pub channels: usize,
    /// `volume × channels`, zero outside the mask.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DenseVolume {
    pub fn at(&self, c: &VoxelCoord) -> &[f64] {
        let i = self.shape.linear_index(c);
        &self.values[i * self.channels..(i + 1) * self.channels]
    }

    /// Max absolute difference against a sparse result. Fails if the sparse
    /// coordinates are not exactly the masked positions.
    pub fn max_abs_diff(&self, sparse: &SparseTensor) -> Result<f64, SpconvError> {
        if sparse.shape() != self.shape || sparse.channels() != self.channels {
            return Err(SpconvError::Shape("sparse result does not match the dense volume".into()));
        }
        let masked = self.mask.iter().filter(|&&m| m).count();
        if masked != sparse.len() || sparse.coords().iter().any(|c| !self.mask[self.shape.linear_index(c)]) {
            return Err(SpconvError::Shape("sparse coordinates differ from the dense mask".into()));
        }
        let mut worst = 0.0f64;
        for (k, c) in sparse.coords().iter().enumerate() {
            for (a, b) in sparse.feature(k).iter().zip(self.at(c)) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

/// Direct dense convolution, masked to the variant's output coordinates.
///
/// Submanifold and generalized layers gather `in[q·s + δ]` for every grid
/// position `q`; transposed layers scatter every input `p` to `p·s + δ`.
/// `targets` is the saved pre-downsample set a transposed layer restores.
pub fn dense_oracle(
    input: &SparseTensor,
    spec: &KernelSpec,
    weights: &WeightTensor,
    targets: Option<&CoordSet>,
) -> Result<DenseVolume, SpconvError> {
    let in_shape = input.shape();
    let out_shape = match spec.variant() {
        ConvVariant::Submanifold => in_shape,
        ConvVariant::Generalized => in_shape.downsampled(spec.stride()),
        ConvVariant::Transposed => targets.map(|t| t.shape()).ok_or(crate::tensor::TensorError::MissingTargets)?,
    };
    for v in [in_shape.volume(), out_shape.volume()] {
        if v > DENSE_ORACLE_MAX_VOXELS {
            return Err(SpconvError::OracleScale { volume: v });
        }
    }
    if input.channels() != weights.c1() || weights.kernel_size() != spec.size() {
        return Err(SpconvError::Shape("weights do not match input channels or kernel size".into()));
    }
    let (c1, c2) = (weights.c1(), weights.c2());
    let offsets = kernel_offsets(spec);
    let s = spec.stride() as i32;

    // integer path mirrors the sparse executor: same feature scale, exact sums
    let (dense_f, dense_q, f_scale) = {
        let mut f = vec![0.0; in_shape.volume() as usize * c1];
        let mut q = vec![0i64; in_shape.volume() as usize * c1];
        let (qf, scale) = quantize_symmetric(input.features());
        for (k, c) in input.coords().iter().enumerate() {
            let i = in_shape.linear_index(c);
            f[i * c1..(i + 1) * c1].copy_from_slice(input.feature(k));
            for a in 0..c1 {
                q[i * c1 + a] = qf[k * c1 + a] as i64;
            }
        }
        (f, q, scale)
    };

    let out_vol = out_shape.volume() as usize;
    let mut real = vec![0.0; out_vol * c2];
    let mut acc = vec![0i64; out_vol * c2];
    let mut accumulate = |p: VoxelCoord, q: VoxelCoord, o: usize| {
        let pi = in_shape.linear_index(&p);
        let qi = out_shape.linear_index(&q);
        for a in 0..c1 {
            for b in 0..c2 {
                match weights.data() {
                    WeightData::Real { values } => {
                        real[qi * c2 + b] += dense_f[pi * c1 + a] * values[(o * c1 + a) * c2 + b];
                    }
                    WeightData::Quantized { values, .. } => {
                        acc[qi * c2 + b] += dense_q[pi * c1 + a] * values[(o * c1 + a) * c2 + b] as i64;
                    }
                }
            }
        }
    };
    match spec.variant() {
        ConvVariant::Submanifold | ConvVariant::Generalized => {
            for qi in 0..out_vol {
                let q = out_shape.coord_of(qi);
                for (o, d) in offsets.iter().enumerate() {
                    let p = VoxelCoord::new(q.x * s + d.dx, q.y * s + d.dy, q.z * s + d.dz);
                    if in_shape.contains(&p) {
                        accumulate(p, q, o);
                    }
                }
            }
        }
        ConvVariant::Transposed => {
            for pi in 0..in_shape.volume() as usize {
                let p = in_shape.coord_of(pi);
                for (o, d) in offsets.iter().enumerate() {
                    let q = VoxelCoord::new(p.x * s + d.dx, p.y * s + d.dy, p.z * s + d.dz);
                    if out_shape.contains(&q) {
                        accumulate(p, q, o);
                    }
                }
            }
        }
    }

    let values = match weights.data() {
        WeightData::Real { .. } => real,
        WeightData::Quantized { scale, .. } => {
            let s = f_scale * scale;
            acc.into_iter().map(|v| v as f64 * s).collect()
        }
    };
    let out_coords = derive_output_coords(&input.coord_set(), spec, targets)?;
    let mut mask = vec![false; out_vol];
    for c in out_coords.coords() {
        mask[out_shape.linear_index(c)] = true;
    }
    let values = values
        .chunks_exact(c2)
        .zip(&mask)
        .flat_map(|(v, &m)| v.iter().map(move |x| if m { *x } else { 0.0 }))
        .collect();
    Ok(DenseVolume { shape: out_shape, channels: c2, values, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_zero_volume() {
        let t = SparseTensor::empty(GridShape::cube(4), 1);
        let d = dense_oracle(&t, &KernelSpec::subm(3), &WeightTensor::ones(3, 1, 1).unwrap(), None).unwrap();
        assert!(d.values.iter().all(|v| *v == 0.0));
        assert!(d.mask.iter().all(|m| !m));
    }

    #[test]
    fn full_dense_interior_is_textbook() {
        let shape = GridShape::cube(4);
        let coords: Vec<_> = (0..64).map(|i| shape.coord_of(i)).collect();
        let feats: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let t = SparseTensor::new(shape, 1, coords, feats.clone()).unwrap();
        let w = WeightTensor::random(3, 1, 1, 3).unwrap();
        let d = dense_oracle(&t, &KernelSpec::subm(3), &w, None).unwrap();
        // textbook triple loop at an interior point
        let q = VoxelCoord::new(1, 2, 1);
        let mut expected = 0.0;
        let mut o = 0;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let p = VoxelCoord::new(q.x + dx, q.y + dy, q.z + dz);
                    expected += feats[shape.linear_index(&p)] * w.get(o, 0, 0);
                    o += 1;
                }
            }
        }
        assert!((d.at(&q)[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn gconv2_window_sum() {
        let shape = GridShape::cube(4);
        let coords: Vec<_> = (0..64).map(|i| shape.coord_of(i)).collect();
        let t = SparseTensor::new(shape, 1, coords, vec![1.0; 64]).unwrap();
        let d = dense_oracle(&t, &KernelSpec::generalized(2, 2), &WeightTensor::ones(2, 1, 1).unwrap(), None).unwrap();
        assert_eq!(d.shape, GridShape::cube(2));
        assert!(d.values.iter().all(|v| *v == 8.0));
    }

    #[test]
    fn refuses_large_grids() {
        let t = SparseTensor::empty(GridShape::new(1024, 1024, 32).unwrap(), 1);
        let r = dense_oracle(&t, &KernelSpec::subm(3), &WeightTensor::ones(3, 1, 1).unwrap(), None);
        assert!(matches!(r, Err(SpconvError::OracleScale { .. })));
    }
}
