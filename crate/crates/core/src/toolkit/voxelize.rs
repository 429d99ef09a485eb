use std::collections::BTreeMap;

use super::ToolkitError;
use crate::tensor::{GridShape, SparseTensor, VoxelCoord};

/// Points with an optional per-point feature vector of fixed width.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<[f64; 3]>,
    /// Feature width; zero for bare positions.
    pub channels: usize,
    /// `positions.len() × channels`, row-major.
    pub features: Vec<f64>,
}

impl PointCloud {
    pub fn from_positions(positions: Vec<[f64; 3]>) -> Self {
        Self { positions, channels: 0, features: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Parses `x y z [f…]` lines separated by whitespace or commas. Blank lines and
/// lines starting with `#` are skipped; every data line needs the same width.
pub fn parse_points(text: &str) -> Result<PointCloud, ToolkitError> {
    let mut cloud = PointCloud::default();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ToolkitError::Config(format!("line {}: {e}", lineno + 1)))?;
        if vals.len() < 3 {
            return Err(ToolkitError::Config(format!("line {}: need at least x y z", lineno + 1)));
        }
        match width {
            None => width = Some(vals.len()),
            Some(w) if w != vals.len() => {
                return Err(ToolkitError::Config(format!(
                    "line {}: {} columns, earlier lines have {w}",
                    lineno + 1,
                    vals.len()
                )))
            }
            _ => {}
        }
        cloud.positions.push([vals[0], vals[1], vals[2]]);
        cloud.features.extend_from_slice(&vals[3..]);
    }
    cloud.channels = width.map_or(0, |w| w - 3);
    Ok(cloud)
}

/// Floors points onto the grid, drops those outside it and averages the
/// features of points sharing a cell. Clouds without features produce a
/// one-channel occupancy tensor.
pub fn voxelize(
    cloud: &PointCloud,
    origin: [f64; 3],
    voxel_size: f64,
    shape: GridShape,
) -> Result<SparseTensor, ToolkitError> {
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(ToolkitError::Config(format!("voxel size {voxel_size} must be positive")));
    }
    if cloud.features.len() != cloud.len() * cloud.channels {
        return Err(ToolkitError::Config("feature matrix does not match the point count".into()));
    }
    let width = cloud.channels.max(1);
    let mut cells: BTreeMap<VoxelCoord, (Vec<f64>, u32)> = BTreeMap::new();
    for (k, p) in cloud.positions.iter().enumerate() {
        let q: Vec<f64> = (0..3).map(|a| ((p[a] - origin[a]) / voxel_size).floor()).collect();
        if q.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > i32::MAX as f64) {
            continue;
        }
        let c = VoxelCoord::new(q[0] as i32, q[1] as i32, q[2] as i32);
        if !shape.contains(&c) {
            continue;
        }
        let (sum, n) = cells.entry(c).or_insert_with(|| (vec![0.0; width], 0));
        if cloud.channels == 0 {
            sum[0] = 1.0;
        } else {
            for (s, f) in sum.iter_mut().zip(&cloud.features[k * width..(k + 1) * width]) {
                *s += f;
            }
        }
        *n += 1;
    }
    let mut coords = Vec::with_capacity(cells.len());
    let mut feats = Vec::with_capacity(cells.len() * width);
    for (c, (sum, n)) in cells {
        coords.push(c);
        if cloud.channels == 0 {
            feats.push(1.0);
        } else {
            feats.extend(sum.into_iter().map(|s| s / n as f64));
        }
    }
    // BTreeMap iterates in canonical order
    Ok(SparseTensor::new(shape, width, coords, feats)?)
}

/// Center of each voxel in world units.
pub fn cell_centers(coords: &[VoxelCoord], origin: [f64; 3], voxel_size: f64) -> Vec<[f64; 3]> {
    coords
        .iter()
        .map(|c| {
            [
                origin[0] + (c.x as f64 + 0.5) * voxel_size,
                origin[1] + (c.y as f64 + 0.5) * voxel_size,
                origin[2] + (c.z as f64 + 0.5) * voxel_size,
            ]
        })
        .collect()
}
