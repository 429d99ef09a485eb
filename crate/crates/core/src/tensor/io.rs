//! Columnar JSON and binary encodings of [`SparseTensor`].
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! offset  size      field
//! 0       4         magic "SPVT"
//! 4       2         format version (1)
//! 6       1         feature dtype (0 = f64)
//! 7       1         reserved, 0
//! 8       12        nx, ny, nz as u32
//! 20      8         N as u64
//! 28      4         C as u32
//! 32      12·N      coordinates, (x, y, z) i32 triples in canonical order
//! ..      8·N·C     features, row-major f64
//! ```
//!
//! The JSON variant carries the same header fields and flat `coords` /
//! `features` arrays.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{GridShape, SparseTensor, TensorError, VoxelCoord};

pub const TENSOR_MAGIC: &[u8; 4] = b"SPVT";
pub const FORMAT_VERSION: u16 = 1;
const JSON_FORMAT_TAG: &str = "spvox.sparse_tensor";

#[derive(Serialize, Deserialize)]
struct TensorJson {
    format: String,
    version: u16,
    shape: [u32; 3],
    n: usize,
    channels: usize,
    coords: Vec<i32>,
    features: Vec<f64>,
}

pub fn to_json(t: &SparseTensor) -> String {
    let doc = TensorJson {
        format: JSON_FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        shape: t.shape().into(),
        n: t.len(),
        channels: t.channels(),
        coords: t.coords().iter().flat_map(|c| [c.x, c.y, c.z]).collect(),
        features: t.features().to_vec(),
    };
    serde_json::to_string(&doc).expect("tensor json is always serializable")
}

pub fn from_json(s: &str) -> Result<SparseTensor, TensorError> {
    let doc: TensorJson = serde_json::from_str(s).map_err(|e| TensorError::Format(e.to_string()))?;
    if doc.format != JSON_FORMAT_TAG || doc.version != FORMAT_VERSION {
        return Err(TensorError::Format(format!("unsupported document {} v{}", doc.format, doc.version)));
    }
    if doc.coords.len() != doc.n * 3 {
        return Err(TensorError::Format(format!(
            "expected {} coordinate integers, found {}",
            doc.n * 3,
            doc.coords.len()
        )));
    }
    let shape = GridShape::try_from(doc.shape)?;
    let coords = doc.coords.chunks_exact(3).map(|c| VoxelCoord::new(c[0], c[1], c[2])).collect();
    SparseTensor::new(shape, doc.channels, coords, doc.features)
}

pub fn write_binary<W: Write>(t: &SparseTensor, mut w: W) -> Result<(), TensorError> {
    let mut buf = Vec::with_capacity(32 + t.len() * (12 + 8 * t.channels()));
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(0);
    buf.push(0);
    let shape: [u32; 3] = t.shape().into();
    for d in shape {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    buf.extend_from_slice(&(t.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(t.channels() as u32).to_le_bytes());
    for c in t.coords() {
        for v in [c.x, c.y, c.z] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for f in t.features() {
        buf.extend_from_slice(&f.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SparseTensor, TensorError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != TENSOR_MAGIC {
        return Err(TensorError::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(cur.array()?);
    if version != FORMAT_VERSION {
        return Err(TensorError::Format(format!("unsupported version {version}")));
    }
    let dtype = cur.take(2)?[0];
    if dtype != 0 {
        return Err(TensorError::Format(format!("unsupported dtype {dtype}")));
    }
    let nx = u32::from_le_bytes(cur.array()?);
    let ny = u32::from_le_bytes(cur.array()?);
    let nz = u32::from_le_bytes(cur.array()?);
    let n = u64::from_le_bytes(cur.array()?) as usize;
    let channels = u32::from_le_bytes(cur.array()?) as usize;
    let shape = GridShape::new(nx, ny, nz)?;
    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        let x = i32::from_le_bytes(cur.array()?);
        let y = i32::from_le_bytes(cur.array()?);
        let z = i32::from_le_bytes(cur.array()?);
        coords.push(VoxelCoord::new(x, y, z));
    }
    let mut features = Vec::with_capacity(n * channels);
    for _ in 0..n * channels {
        features.push(f64::from_le_bytes(cur.array()?));
    }
    if cur.pos != bytes.len() {
        return Err(TensorError::Format("trailing bytes".into()));
    }
    SparseTensor::new(shape, channels, coords, features)
}

pub(crate) struct Cursor<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], TensorError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| TensorError::Format("truncated input".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], TensorError> {
        Ok(self.take(N)?.try_into().expect("slice length checked"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseTensor {
        SparseTensor::new(
            GridShape::new(4, 3, 2).unwrap(),
            2,
            vec![VoxelCoord::new(3, 0, 0), VoxelCoord::new(0, 2, 1)],
            vec![0.5, -1.0, 2.25, 1e-9],
        )
        .unwrap()
    }

    #[test]
    fn json_roundtrip() {
        let t = sample();
        assert_eq!(from_json(&to_json(&t)).unwrap(), t);
    }

    #[test]
    fn binary_layout_and_roundtrip() {
        let t = sample();
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 2 * 12 + 4 * 8);
        assert_eq!(&buf[..4], b"SPVT");
        assert_eq!(u64::from_le_bytes(buf[20..28].try_into().unwrap()), 2);
        assert_eq!(read_binary(&buf[..]).unwrap(), t);
    }

    #[test]
    fn truncated_binary_rejected() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_binary(&buf[..]), Err(TensorError::Format(_))));
    }

    #[test]
    fn json_rejects_unsorted() {
        let bad = r#"{"format":"spvox.sparse_tensor","version":1,"shape":[4,4,4],"n":2,"channels":1,
            "coords":[1,0,0,0,0,0],"features":[1.0,2.0]}"#;
        assert!(matches!(from_json(bad), Err(TensorError::NotCanonical { .. })));
    }
}
