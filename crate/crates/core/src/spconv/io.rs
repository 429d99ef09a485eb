//! JSON and binary encodings of [`WeightTensor`].
//!
//! Binary layout, little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SPVW"
//! 4       2     format version (1)
//! 6       1     dtype (0 = f64, 1 = i8)
//! 7       1     reserved, 0
//! 8       4     K as u32
//! 12      4     C1 as u32
//! 16      4     C2 as u32
//! 20      8     scale as f64 (1.0 for f64 weights)
//! 28      ..    K³·C1·C2 values, offset-major
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{SpconvError, WeightData, WeightTensor};
use crate::tensor::io::{Cursor, FORMAT_VERSION};
use crate::tensor::TensorError;

pub const WEIGHT_MAGIC: &[u8; 4] = b"SPVW";
const JSON_FORMAT_TAG: &str = "spvox.weight_tensor";

#[derive(Serialize, Deserialize)]
struct WeightJson {
    format: String,
    version: u16,
    kernel_size: u32,
    c1: usize,
    c2: usize,
    #[serde(flatten)]
    data: WeightData,
}

pub fn weights_to_json(w: &WeightTensor) -> String {
    let doc = WeightJson {
        format: JSON_FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        kernel_size: w.kernel_size(),
        c1: w.c1(),
        c2: w.c2(),
        data: w.data().clone(),
    };
    serde_json::to_string(&doc).expect("weights are always serializable")
}

pub fn weights_from_json(s: &str) -> Result<WeightTensor, SpconvError> {
    let doc: WeightJson = serde_json::from_str(s).map_err(|e| TensorError::Format(e.to_string()))?;
    if doc.format != JSON_FORMAT_TAG || doc.version != FORMAT_VERSION {
        return Err(TensorError::Format(format!("unsupported document {} v{}", doc.format, doc.version)).into());
    }
    WeightTensor::new(doc.kernel_size, doc.c1, doc.c2, doc.data)
}

pub fn write_weights_binary<W: Write>(w: &WeightTensor, mut out: W) -> Result<(), SpconvError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(WEIGHT_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let (dtype, scale) = match w.data() {
        WeightData::Real { .. } => (0u8, 1.0f64),
        WeightData::Quantized { scale, .. } => (1u8, *scale),
    };
    buf.push(dtype);
    buf.push(0);
    for v in [w.kernel_size(), w.c1() as u32, w.c2() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&scale.to_le_bytes());
    match w.data() {
        WeightData::Real { values } => values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
        WeightData::Quantized { values, .. } => buf.extend(values.iter().map(|v| *v as u8)),
    }
    out.write_all(&buf).map_err(TensorError::from)?;
    Ok(())
}

pub fn read_weights_binary<R: Read>(mut r: R) -> Result<WeightTensor, SpconvError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(TensorError::from)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != WEIGHT_MAGIC {
        return Err(TensorError::Format("bad magic".into()).into());
    }
    let version = u16::from_le_bytes(cur.array()?);
    if version != FORMAT_VERSION {
        return Err(TensorError::Format(format!("unsupported version {version}")).into());
    }
    let dtype = cur.take(2)?[0];
    let k = u32::from_le_bytes(cur.array()?);
    let c1 = u32::from_le_bytes(cur.array()?) as usize;
    let c2 = u32::from_le_bytes(cur.array()?) as usize;
    let scale = f64::from_le_bytes(cur.array()?);
    let n = (k as usize).pow(3) * c1 * c2;
    let data = match dtype {
        0 => {
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                values.push(f64::from_le_bytes(cur.array()?));
            }
            WeightData::Real { values }
        }
        1 => WeightData::Quantized { values: cur.take(n)?.iter().map(|b| *b as i8).collect(), scale },
        other => return Err(TensorError::Format(format!("unsupported dtype {other}")).into()),
    };
    if cur.pos != bytes.len() {
        return Err(TensorError::Format("trailing bytes".into()).into());
    }
    WeightTensor::new(k, c1, c2, data)
}
