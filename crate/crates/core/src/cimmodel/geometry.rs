use serde::{Deserialize, Serialize};

use super::CimError;

/// Physical shape of the CIM core: tiles of memory cells split into PEs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct CimGeometry {
    tile_rows: u32,
    tile_cols: u32,
    cell_bits: u32,
    weight_bits: u32,
    pe_rows: u32,
    pe_cols: u32,
    num_tiles: u32,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    tile_rows: u32,
    tile_cols: u32,
    cell_bits: u32,
    weight_bits: u32,
    pe_rows: u32,
    pe_cols: u32,
    num_tiles: u32,
}

impl TryFrom<RawGeometry> for CimGeometry {
    type Error = CimError;
    fn try_from(r: RawGeometry) -> Result<Self, CimError> {
        CimGeometry::new(r.tile_rows, r.tile_cols, r.cell_bits, r.weight_bits, r.pe_rows, r.pe_cols, r.num_tiles)
    }
}

impl From<CimGeometry> for RawGeometry {
    fn from(g: CimGeometry) -> Self {
        RawGeometry {
            tile_rows: g.tile_rows,
            tile_cols: g.tile_cols,
            cell_bits: g.cell_bits,
            weight_bits: g.weight_bits,
            pe_rows: g.pe_rows,
            pe_cols: g.pe_cols,
            num_tiles: g.num_tiles,
        }
    }
}

impl CimGeometry {
    pub fn new(
        tile_rows: u32,
        tile_cols: u32,
        cell_bits: u32,
        weight_bits: u32,
        pe_rows: u32,
        pe_cols: u32,
        num_tiles: u32,
    ) -> Result<Self, CimError> {
        let dims = [tile_rows, tile_cols, cell_bits, weight_bits, pe_rows, pe_cols, num_tiles];
        if dims.contains(&0) {
            return Err(CimError::Geometry("all dimensions must be positive".into()));
        }
        if !tile_rows.is_multiple_of(pe_rows) || !tile_cols.is_multiple_of(pe_cols) {
            return Err(CimError::Geometry(format!(
                "PE {pe_rows}x{pe_cols} does not divide tile {tile_rows}x{tile_cols}"
            )));
        }
        Ok(Self { tile_rows, tile_cols, cell_bits, weight_bits, pe_rows, pe_cols, num_tiles })
    }

    pub fn with_tiles(self, num_tiles: u32) -> Result<Self, CimError> {
        Self::new(
            self.tile_rows,
            self.tile_cols,
            self.cell_bits,
            self.weight_bits,
            self.pe_rows,
            self.pe_cols,
            num_tiles,
        )
    }

    pub fn tile_rows(&self) -> u32 {
        self.tile_rows
    }
    pub fn tile_cols(&self) -> u32 {
        self.tile_cols
    }
    pub fn cell_bits(&self) -> u32 {
        self.cell_bits
    }
    pub fn weight_bits(&self) -> u32 {
        self.weight_bits
    }
    pub fn pe_rows(&self) -> u32 {
        self.pe_rows
    }
    pub fn pe_cols(&self) -> u32 {
        self.pe_cols
    }
    pub fn num_tiles(&self) -> u32 {
        self.num_tiles
    }

    /// Cells needed to store one weight.
    pub fn cells_per_weight(&self) -> u32 {
        self.weight_bits.div_ceil(self.cell_bits)
    }

    pub fn pes_per_tile(&self) -> u64 {
        (self.tile_rows / self.pe_rows) as u64 * (self.tile_cols / self.pe_cols) as u64
    }

    pub fn total_pes(&self) -> u64 {
        self.pes_per_tile() * self.num_tiles as u64
    }

    pub fn pe_cells(&self) -> u64 {
        self.pe_rows as u64 * self.pe_cols as u64
    }

    pub fn total_cells(&self) -> u64 {
        self.tile_rows as u64 * self.tile_cols as u64 * self.num_tiles as u64
    }
}

impl Default for CimGeometry {
    /// 8 tiles of 1024 × 1024 one-bit cells, 8-bit weights, 128 × 128 PEs.
    fn default() -> Self {
        Self::new(1024, 1024, 1, 8, 128, 128, 8).expect("default geometry is valid")
    }
}
