use serde::{Deserialize, Serialize};

use super::{CimError, CimGeometry};
use crate::tensor::KernelSpec;

/// Kernel footprint as seen by the weight mapper.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CimKernel {
    /// `K³` offsets of a sparse 3D kernel.
    Conv3d { size: u32 },
    /// `K²` offsets of a dense 2D kernel.
    Conv2d { size: u32 },
}

impl CimKernel {
    pub fn size(&self) -> u32 {
        match *self {
            CimKernel::Conv3d { size } | CimKernel::Conv2d { size } => size,
        }
    }

    pub fn offset_count(&self) -> usize {
        match *self {
            CimKernel::Conv3d { size } => (size as usize).pow(3),
            CimKernel::Conv2d { size } => (size as usize).pow(2),
        }
    }
}

impl From<KernelSpec> for CimKernel {
    fn from(spec: KernelSpec) -> Self {
        CimKernel::Conv3d { size: spec.size() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingScheme {
    /// All offsets unrolled into one tall column per output channel.
    Traditional,
    /// One `C1 × C2` block per offset copy, each in its own PEs.
    SubMatrix,
}

/// One weight block placed on the core. `pe_slot` is the first PE it touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub offset: u32,
    pub copy: u32,
    pub pe_slot: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CimLayout {
    pub scheme: MappingScheme,
    pub kernel: CimKernel,
    pub c1: u32,
    pub c2: u32,
    pub geometry: CimGeometry,
    /// Copies per offset. Zero means the offset is not resident.
    pub copy_factors: Vec<u32>,
    pub placements: Vec<Placement>,
    /// Cell rows and columns of one placement.
    pub block_rows: u64,
    pub block_cols: u64,
    /// PEs touched by one placement (sub-matrix) or by the whole layout (traditional).
    pub pes_per_block: u64,
    pub pes_used: u64,
    /// Traditional only: physical columns a tall logical column wraps into.
    pub row_folds: u64,
    pub occupied_cells: u64,
}

impl CimLayout {
    pub fn copies(&self, offset: usize) -> u32 {
        self.copy_factors.get(offset).copied().unwrap_or(0)
    }

    pub fn total_copies(&self) -> u64 {
        self.copy_factors.iter().map(|&c| c as u64).sum()
    }

    pub fn utilized_fraction(&self) -> f64 {
        self.occupied_cells as f64 / self.geometry.total_cells() as f64
    }
}

fn check_channels(c1: u32, c2: u32) -> Result<(), CimError> {
    if c1 == 0 || c2 == 0 {
        return Err(CimError::Geometry("channel counts must be positive".into()));
    }
    Ok(())
}

/// Unrolls the kernel into one logical column of height `C1·K³` per output
/// channel bit. Columns taller than a tile fold into adjacent physical
/// columns whose partial sums are added outside the array.
pub fn layout_traditional(
    kernel: impl Into<CimKernel>,
    c1: u32,
    c2: u32,
    geom: &CimGeometry,
) -> Result<CimLayout, CimError> {
    let kernel = kernel.into();
    check_channels(c1, c2)?;
    let n_off = kernel.offset_count() as u64;
    let rows = c1 as u64 * n_off;
    let cols = c2 as u64 * geom.cells_per_weight() as u64;
    let tile_rows = geom.tile_rows() as u64;
    let folds = rows.div_ceil(tile_rows);
    let phys_cols = cols * folds;
    let available_cols = geom.num_tiles() as u64 * geom.tile_cols() as u64;
    if phys_cols > available_cols {
        return Err(CimError::Capacity { needed_cells: phys_cols * tile_rows, available_cells: geom.total_cells() });
    }

    let pe_grid_cols = (geom.tile_cols() / geom.pe_cols()) as u64;
    let pe_of = |row: u64, col: u64| -> u64 {
        let tile = col / geom.tile_cols() as u64;
        let col_in_tile = col % geom.tile_cols() as u64;
        tile * geom.pes_per_tile() + (row / geom.pe_rows() as u64) * pe_grid_cols + col_in_tile / geom.pe_cols() as u64
    };
    let placements = (0..n_off)
        .map(|o| {
            let r = o * c1 as u64;
            Placement { offset: o as u32, copy: 0, pe_slot: pe_of(r % tile_rows, (r / tile_rows) * cols) }
        })
        .collect();

    // PEs touched: full row bands for all but the last fold, which may be short
    let pe_col_span = |c0: u64, c1: u64| (c0 / geom.pe_cols() as u64..=(c1 - 1) / geom.pe_cols() as u64).count() as u64;
    let row_bands_full = tile_rows / geom.pe_rows() as u64;
    let last_rows = rows - (folds - 1) * tile_rows;
    let mut pes_used = 0;
    for f in 0..folds {
        let bands = if f + 1 == folds { last_rows.div_ceil(geom.pe_rows() as u64) } else { row_bands_full };
        pes_used += bands * pe_col_span(f * cols, (f + 1) * cols);
    }

    Ok(CimLayout {
        scheme: MappingScheme::Traditional,
        kernel,
        c1,
        c2,
        geometry: *geom,
        copy_factors: vec![1; n_off as usize],
        placements,
        block_rows: c1 as u64,
        block_cols: cols,
        pes_per_block: pes_used,
        pes_used,
        row_folds: folds,
        occupied_cells: rows * cols,
    })
}

/// Places every copy of every offset's `C1 × C2` block in its own PEs so each
/// copy can be activated or idled on its own.
pub fn layout_submatrix(
    kernel: impl Into<CimKernel>,
    c1: u32,
    c2: u32,
    geom: &CimGeometry,
    copy_factors: &[u32],
) -> Result<CimLayout, CimError> {
    let kernel = kernel.into();
    check_channels(c1, c2)?;
    if copy_factors.len() != kernel.offset_count() {
        return Err(CimError::Geometry(format!(
            "{} copy factors for a kernel with {} offsets",
            copy_factors.len(),
            kernel.offset_count()
        )));
    }
    let rows = c1 as u64;
    let cols = c2 as u64 * geom.cells_per_weight() as u64;
    let span = rows.div_ceil(geom.pe_rows() as u64) * cols.div_ceil(geom.pe_cols() as u64);
    let blocks: u64 = copy_factors.iter().map(|&c| c as u64).sum();
    let needed = blocks * span;
    if needed > geom.total_pes() {
        return Err(CimError::Capacity { needed_cells: needed * geom.pe_cells(), available_cells: geom.total_cells() });
    }
    let mut placements = Vec::with_capacity(blocks as usize);
    let mut slot = 0;
    for (o, &copies) in copy_factors.iter().enumerate() {
        for copy in 0..copies {
            placements.push(Placement { offset: o as u32, copy, pe_slot: slot });
            slot += span;
        }
    }
    Ok(CimLayout {
        scheme: MappingScheme::SubMatrix,
        kernel,
        c1,
        c2,
        geometry: *geom,
        copy_factors: copy_factors.to_vec(),
        placements,
        block_rows: rows,
        block_cols: cols,
        pes_per_block: span,
        pes_used: needed,
        row_folds: 1,
        occupied_cells: blocks * rows * cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_tile() -> CimGeometry {
        CimGeometry::default().with_tiles(1).unwrap()
    }

    #[test]
    fn traditional_fits_one_tile() {
        let l = layout_traditional(KernelSpec::subm(3), 16, 32, &one_tile()).unwrap();
        assert_eq!(l.row_folds, 1);
        assert_eq!(l.occupied_cells, 432 * 256);
        assert_eq!(l.placements.len(), 27);
        // 432 rows span 4 PE bands, 256 columns span 2 PE columns
        assert_eq!(l.pes_used, 8);
    }

    #[test]
    fn traditional_folds_tall_columns() {
        let l = layout_traditional(KernelSpec::subm(3), 64, 16, &one_tile()).unwrap();
        assert_eq!(l.row_folds, 2);
        assert_eq!(l.occupied_cells, 1728 * 128);
    }

    #[test]
    fn traditional_capacity_error() {
        let r = layout_traditional(KernelSpec::subm(3), 512, 64, &one_tile());
        match r {
            Err(CimError::Capacity { needed_cells, available_cells }) => assert!(needed_cells > available_cells),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn k1_traditional_matches_one_block() {
        let g = one_tile();
        let t = layout_traditional(KernelSpec::subm(1), 16, 16, &g).unwrap();
        let s = layout_submatrix(KernelSpec::subm(1), 16, 16, &g, &[1]).unwrap();
        assert_eq!(t.occupied_cells, s.occupied_cells);
        assert_eq!((t.block_rows, t.block_cols), (s.block_rows, s.block_cols));
    }

    #[test]
    fn submatrix_subm3() {
        let l = layout_submatrix(KernelSpec::subm(3), 16, 16, &CimGeometry::default(), &[1; 27]).unwrap();
        assert_eq!(l.placements.len(), 27);
        assert_eq!((l.block_rows, l.block_cols), (16, 128));
        assert_eq!(l.occupied_cells, 27 * 16 * 128);
    }

    #[test]
    fn submatrix_conv2d_has_nine() {
        let l = layout_submatrix(CimKernel::Conv2d { size: 3 }, 16, 16, &CimGeometry::default(), &[1; 9]).unwrap();
        assert_eq!(l.placements.len(), 9);
    }

    #[test]
    fn extra_center_copy() {
        let mut copies = [1; 27];
        copies[13] = 2;
        let l = layout_submatrix(KernelSpec::subm(3), 16, 16, &CimGeometry::default(), &copies).unwrap();
        assert_eq!(l.placements.len(), 28);
        assert_eq!(l.placements.iter().filter(|p| p.offset == 13).count(), 2);
    }

    #[test]
    fn submatrix_capacity_error() {
        // 256 × 256·8 cells is 2 × 16 PEs per block; 27 blocks need 864 PEs
        let r = layout_submatrix(KernelSpec::subm(3), 256, 256, &CimGeometry::default(), &[1; 27]);
        assert!(matches!(r, Err(CimError::Capacity { .. })));
    }

    #[test]
    fn wrong_copy_factor_length() {
        assert!(layout_submatrix(KernelSpec::subm(3), 1, 1, &CimGeometry::default(), &[1; 9]).is_err());
    }
}
