use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::tensor::{kernel_offsets, ConvVariant, KernelSpec};

/// One IN-OUT pair: input voxel `input` feeds output voxel `output` through
/// kernel offset number `offset` (index into [`kernel_offsets`]).
///
/// Ordering is `(output, offset, input)`, the scatter order used by the
/// convolution executor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MapEntry {
    pub input: u32,
    pub output: u32,
    pub offset: u16,
}

impl MapEntry {
    pub const fn new(input: u32, output: u32, offset: u16) -> Self {
        Self { input, output, offset }
    }
}

impl Ord for MapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.output, self.offset, self.input).cmp(&(other.output, other.offset, other.input))
    }
}

impl PartialOrd for MapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A duplicate-free set of IN-OUT pairs, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InOutMap {
    entries: Vec<MapEntry>,
}

impl InOutMap {
    pub fn from_entries(mut entries: Vec<MapEntry>) -> Result<Self, SearchError> {
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(SearchError::DuplicateEntry(w[0]));
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[MapEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pair count per kernel offset.
    pub fn offset_counts(&self, kernel_volume: usize) -> Vec<u64> {
        let mut counts = vec![0u64; kernel_volume];
        for e in &self.entries {
            counts[e.offset as usize] += 1;
        }
        counts
    }

    /// Checks `(i, j, δ) ∈ M ⇔ (j, i, −δ) ∈ M`.
    pub fn is_symmetric(&self, spec: &KernelSpec) -> bool {
        let offs = kernel_offsets(spec);
        self.entries.iter().all(|e| {
            spec.offset_index(-offs[e.offset as usize])
                .is_some_and(|neg| self.entries.binary_search(&MapEntry::new(e.output, e.input, neg as u16)).is_ok())
        })
    }
}

/// Completes a half-offset map with the mirrored pairs of every non-center entry.
///
/// Fails with [`SearchError::DuplicateEntry`] if a pair and its mirror were
/// both present in `half`.
pub fn expand_symmetric(half: &InOutMap, spec: &KernelSpec) -> Result<InOutMap, SearchError> {
    if spec.variant() != ConvVariant::Submanifold || spec.size().is_multiple_of(2) {
        return Err(SearchError::UnsupportedKernel(*spec));
    }
    let offs = kernel_offsets(spec);
    let center = spec.center_index().expect("odd kernel has a center") as u16;
    let mut entries = Vec::with_capacity(half.len() * 2);
    for e in half.entries() {
        entries.push(*e);
        if e.offset != center {
            let neg = spec.offset_index(-offs[e.offset as usize]).expect("negated offset stays in a centered kernel");
            entries.push(MapEntry::new(e.output, e.input, neg as u16));
        }
    }
    InOutMap::from_entries(entries)
}
