use serde::{Deserialize, Serialize};

use super::SearchError;

/// On-chip buffer model shared by all streaming searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBufferConfig", into = "RawBufferConfig")]
pub struct BufferConfig {
    sorter_len: usize,
    fifo_capacity_i: usize,
    fifo_capacity_ii: usize,
    backup_capacity: usize,
}

#[derive(Serialize, Deserialize)]
struct RawBufferConfig {
    sorter_len: usize,
    fifo_capacity_i: usize,
    fifo_capacity_ii: usize,
    backup_capacity: usize,
}

impl TryFrom<RawBufferConfig> for BufferConfig {
    type Error = SearchError;
    fn try_from(r: RawBufferConfig) -> Result<Self, SearchError> {
        BufferConfig::new(r.sorter_len, r.fifo_capacity_i, r.fifo_capacity_ii, r.backup_capacity)
    }
}

impl From<BufferConfig> for RawBufferConfig {
    fn from(b: BufferConfig) -> Self {
        RawBufferConfig {
            sorter_len: b.sorter_len,
            fifo_capacity_i: b.fifo_capacity_i,
            fifo_capacity_ii: b.fifo_capacity_ii,
            backup_capacity: b.backup_capacity,
        }
    }
}

impl BufferConfig {
    pub fn new(
        sorter_len: usize,
        fifo_capacity_i: usize,
        fifo_capacity_ii: usize,
        backup_capacity: usize,
    ) -> Result<Self, SearchError> {
        if sorter_len < 2 || !sorter_len.is_power_of_two() {
            return Err(SearchError::InvalidBuffer(format!("sorter length {sorter_len} must be a power of two >= 2")));
        }
        if fifo_capacity_i == 0 || fifo_capacity_ii == 0 {
            return Err(SearchError::InvalidBuffer("FIFO capacities must be positive".into()));
        }
        Ok(Self { sorter_len, fifo_capacity_i, fifo_capacity_ii, backup_capacity })
    }

    /// All capacities equal to the sorter length.
    pub fn matched(sorter_len: usize) -> Result<Self, SearchError> {
        Self::new(sorter_len, sorter_len, sorter_len, sorter_len)
    }

    pub fn with_fifo_ii(self, cap: usize) -> Result<Self, SearchError> {
        Self::new(self.sorter_len, self.fifo_capacity_i, cap, self.backup_capacity)
    }

    pub fn with_fifo_i(self, cap: usize) -> Result<Self, SearchError> {
        Self::new(self.sorter_len, cap, self.fifo_capacity_ii, self.backup_capacity)
    }

    pub fn unbounded() -> Self {
        Self::new(64, usize::MAX / 4, usize::MAX / 4, usize::MAX / 4).expect("valid")
    }

    pub fn sorter_len(&self) -> usize {
        self.sorter_len
    }
    pub fn fifo_capacity_i(&self) -> usize {
        self.fifo_capacity_i
    }
    pub fn fifo_capacity_ii(&self) -> usize {
        self.fifo_capacity_ii
    }
    pub fn backup_capacity(&self) -> usize {
        self.backup_capacity
    }

    /// Combined voxel slots of both FIFOs.
    pub fn fifo_total(&self) -> usize {
        self.fifo_capacity_i.saturating_add(self.fifo_capacity_ii)
    }
}

impl Default for BufferConfig {
    fn default() -> Self {
        Self::matched(64).expect("64 is a valid sorter length")
    }
}

/// Memory-traffic counters of one search run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessStats {
    /// Number of input voxels `N`.
    pub voxels: u64,
    /// Voxel-coordinate records fetched from the backing store.
    pub offchip_coord_reads: u64,
    /// `offchip_coord_reads / N`, zero for empty scenes.
    pub normalized_access: f64,
    pub sorter_invocations: u64,
    pub table_reads: u64,
    pub table_size_entries: u64,
    pub replicated_voxels: u64,
    pub peak_fifo_occupancy: u64,
}

impl AccessStats {
    pub(crate) fn new(voxels: usize) -> Self {
        Self { voxels: voxels as u64, ..Self::default() }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.normalized_access =
            if self.voxels == 0 { 0.0 } else { self.offchip_coord_reads as f64 / self.voxels as f64 };
        self
    }

    pub fn replicated_fraction(&self) -> f64 {
        if self.voxels == 0 {
            0.0
        } else {
            self.replicated_voxels as f64 / self.voxels as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorter_must_be_power_of_two() {
        assert!(BufferConfig::new(48, 64, 64, 0).is_err());
        assert!(BufferConfig::new(1, 64, 64, 0).is_err());
        assert!(BufferConfig::new(2, 1, 1, 0).is_ok());
    }

    #[test]
    fn serde_validates() {
        let ok: BufferConfig = serde_json::from_str(
            r#"{"sorter_len":64,"fifo_capacity_i":64,"fifo_capacity_ii":1024,"backup_capacity":64}"#,
        )
        .unwrap();
        assert_eq!(ok.fifo_capacity_ii(), 1024);
        assert!(serde_json::from_str::<BufferConfig>(
            r#"{"sorter_len":60,"fifo_capacity_i":64,"fifo_capacity_ii":64,"backup_capacity":64}"#
        )
        .is_err());
    }

    #[test]
    fn normalized_of_empty_is_zero() {
        assert_eq!(AccessStats::new(0).finish().normalized_access, 0.0);
    }
}
