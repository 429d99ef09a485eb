use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SpconvError;

/// Storage of the `K³ × C1 × C2` weight block, offset-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dtype", rename_all = "snake_case")]
pub enum WeightData {
    Real {
        values: Vec<f64>,
    },
    /// Signed 8-bit integers sharing one real scale.
    Quantized {
        values: Vec<i8>,
        scale: f64,
    },
}

/// Per-offset `C1 × C2` matrices `W_δ`, indexed like [`crate::tensor::kernel_offsets`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTensor {
    kernel_size: u32,
    c1: usize,
    c2: usize,
    data: WeightData,
}

impl WeightTensor {
    pub fn new(kernel_size: u32, c1: usize, c2: usize, data: WeightData) -> Result<Self, SpconvError> {
        if kernel_size == 0 || c1 == 0 || c2 == 0 {
            return Err(SpconvError::Shape(format!("weights need K, C1, C2 > 0, got {kernel_size}, {c1}, {c2}")));
        }
        let expected = (kernel_size as usize).pow(3) * c1 * c2;
        let got = match &data {
            WeightData::Real { values } => values.len(),
            WeightData::Quantized { values, scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(SpconvError::Shape(format!("quantization scale {scale} must be positive")));
                }
                values.len()
            }
        };
        if got != expected {
            return Err(SpconvError::Shape(format!("expected {expected} weights, got {got}")));
        }
        Ok(Self { kernel_size, c1, c2, data })
    }

    pub fn real(kernel_size: u32, c1: usize, c2: usize, values: Vec<f64>) -> Result<Self, SpconvError> {
        Self::new(kernel_size, c1, c2, WeightData::Real { values })
    }

    pub fn zeros(kernel_size: u32, c1: usize, c2: usize) -> Result<Self, SpconvError> {
        Self::real(kernel_size, c1, c2, vec![0.0; (kernel_size as usize).pow(3) * c1 * c2])
    }

    /// Every weight `1.0`.
    pub fn ones(kernel_size: u32, c1: usize, c2: usize) -> Result<Self, SpconvError> {
        Self::real(kernel_size, c1, c2, vec![1.0; (kernel_size as usize).pow(3) * c1 * c2])
    }

    /// Uniform in `[-1, 1)`, seeded.
    pub fn random(kernel_size: u32, c1: usize, c2: usize, seed: u64) -> Result<Self, SpconvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (kernel_size as usize).pow(3) * c1 * c2;
        Self::real(kernel_size, c1, c2, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Identity on the center offset, zero elsewhere. `kernel_size` must be odd.
    pub fn identity_center(kernel_size: u32, channels: usize) -> Result<Self, SpconvError> {
        if kernel_size.is_multiple_of(2) {
            return Err(SpconvError::Shape("even kernels have no center offset".into()));
        }
        let mut w = Self::zeros(kernel_size, channels, channels)?;
        let center = ((kernel_size as usize).pow(3) - 1) / 2;
        if let WeightData::Real { values } = &mut w.data {
            for c in 0..channels {
                values[(center * channels + c) * channels + c] = 1.0;
            }
        }
        Ok(w)
    }

    /// Symmetric per-tensor 8-bit quantization (`scale = max|w| / 127`).
    pub fn quantize(&self) -> Self {
        let values: Vec<f64> = (0..self.len()).map(|i| self.value_at(i)).collect();
        let (q, scale) = quantize_symmetric(&values);
        Self { data: WeightData::Quantized { values: q, scale }, ..self.clone() }
    }

    pub fn kernel_size(&self) -> u32 {
        self.kernel_size
    }
    pub fn kernel_volume(&self) -> usize {
        (self.kernel_size as usize).pow(3)
    }
    pub fn c1(&self) -> usize {
        self.c1
    }
    pub fn c2(&self) -> usize {
        self.c2
    }
    pub fn data(&self) -> &WeightData {
        &self.data
    }
    pub fn is_quantized(&self) -> bool {
        matches!(self.data, WeightData::Quantized { .. })
    }

    fn len(&self) -> usize {
        self.kernel_volume() * self.c1 * self.c2
    }

    fn value_at(&self, i: usize) -> f64 {
        match &self.data {
            WeightData::Real { values } => values[i],
            WeightData::Quantized { values, scale } => values[i] as f64 * scale,
        }
    }

    /// Dequantized `W_δ[a][b]`.
    pub fn get(&self, offset: usize, a: usize, b: usize) -> f64 {
        self.value_at((offset * self.c1 + a) * self.c2 + b)
    }

    /// The `C1 × C2` block of one offset, row-major, dequantized.
    pub fn matrix(&self, offset: usize) -> Vec<f64> {
        let base = offset * self.c1 * self.c2;
        (base..base + self.c1 * self.c2).map(|i| self.value_at(i)).collect()
    }
}

/// Rounds to `[-127, 127]` with `scale = max|v| / 127` (`1.0` for an all-zero slice).
pub fn quantize_symmetric(values: &[f64]) -> (Vec<i8>, f64) {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max > 0.0 { max / 127.0 } else { 1.0 };
    let q = values.iter().map(|v| (v / scale).round().clamp(-127.0, 127.0) as i8).collect();
    (q, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(WeightTensor::real(3, 2, 2, vec![0.0; 10]).is_err());
        assert!(WeightTensor::real(3, 2, 2, vec![0.0; 108]).is_ok());
    }

    #[test]
    fn identity_center_layout() {
        let w = WeightTensor::identity_center(3, 2).unwrap();
        assert_eq!(w.get(13, 0, 0), 1.0);
        assert_eq!(w.get(13, 0, 1), 0.0);
        assert_eq!(w.get(12, 1, 1), 0.0);
    }

    #[test]
    fn quantize_round_trip_error_bounded() {
        let w = WeightTensor::random(3, 4, 4, 5).unwrap();
        let q = w.quantize();
        let WeightData::Quantized { scale, .. } = q.data() else { panic!() };
        for o in 0..27 {
            for a in 0..4 {
                for b in 0..4 {
                    assert!((w.get(o, a, b) - q.get(o, a, b)).abs() <= scale / 2.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_slice_scale_is_one() {
        assert_eq!(quantize_symmetric(&[0.0, 0.0]).1, 1.0);
    }
}
