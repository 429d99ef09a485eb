use super::weights::{quantize_symmetric, WeightData};
use super::{SpconvError, WeightTensor};
use crate::mapsearch::InOutMap;
use crate::tensor::{CoordSet, SparseTensor};

/// Gather, multiply, scatter: `f'_o = Σ_{(i, o, δ)} W_δ · f_i`.
///
/// Entries are applied in map order, `(output, offset, input)`, so results do
/// not depend on which search produced the map. Quantized weights switch to
/// integer arithmetic: features are quantized per tensor, products accumulate
/// in `i64`, and one combined scale is applied per output value.
pub fn execute_spconv(
    input: &SparseTensor,
    outputs: &CoordSet,
    map: &InOutMap,
    weights: &WeightTensor,
) -> Result<SparseTensor, SpconvError> {
    if input.channels() != weights.c1() {
        return Err(SpconvError::Shape(format!(
            "input has {} channels, weights expect {}",
            input.channels(),
            weights.c1()
        )));
    }
    let (c1, c2) = (weights.c1(), weights.c2());
    let kvol = weights.kernel_volume();
    for e in map.entries() {
        if e.input as usize >= input.len() || e.output as usize >= outputs.len() || e.offset as usize >= kvol {
            return Err(SpconvError::MapIndex(*e));
        }
    }
    let n_out = outputs.len();
    let features = match weights.data() {
        WeightData::Real { values } => {
            let mut out = vec![0.0; n_out * c2];
            for e in map.entries() {
                let f = input.feature(e.input as usize);
                let w = &values[e.offset as usize * c1 * c2..(e.offset as usize + 1) * c1 * c2];
                let dst = &mut out[e.output as usize * c2..(e.output as usize + 1) * c2];
                for (a, fa) in f.iter().enumerate() {
                    for (b, d) in dst.iter_mut().enumerate() {
                        *d += fa * w[a * c2 + b];
                    }
                }
            }
            out
        }
        WeightData::Quantized { values, scale } => {
            let (qf, f_scale) = quantize_symmetric(input.features());
            let mut acc = vec![0i64; n_out * c2];
            for e in map.entries() {
                let f = &qf[e.input as usize * c1..(e.input as usize + 1) * c1];
                let w = &values[e.offset as usize * c1 * c2..(e.offset as usize + 1) * c1 * c2];
                let dst = &mut acc[e.output as usize * c2..(e.output as usize + 1) * c2];
                for (a, &fa) in f.iter().enumerate() {
                    for (b, d) in dst.iter_mut().enumerate() {
                        *d += fa as i64 * w[a * c2 + b] as i64;
                    }
                }
            }
            let s = f_scale * scale;
            acc.into_iter().map(|v| v as f64 * s).collect()
        }
    };
    Ok(SparseTensor::new(outputs.shape(), c2, outputs.coords().to_vec(), features)?)
}
