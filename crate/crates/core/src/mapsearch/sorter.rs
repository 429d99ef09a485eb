//! Fixed-length bitonic merge sorter with intersection detection.
//!
//! Query positions and candidate voxels are packed into windows of exactly
//! `len` slots, padded with sentinels at the maximum key, sorted by a bitonic
//! network, and scanned for adjacent equal coordinates.

use crate::tensor::VoxelCoord;

/// Sorts `v` in place with a bitonic network. `v.len()` must be a power of two.
pub fn bitonic_sort<T: Ord + Copy>(v: &mut [T]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "bitonic network needs a power-of-two length");
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..n {
                let l = i ^ j;
                if l > i {
                    let ascending = i & k == 0;
                    if (v[i] > v[l]) == ascending {
                        v.swap(i, l);
                    }
                }
            }
            j /= 2;
        }
        k *= 2;
    }
}

const CANDIDATE: u8 = 0;
const QUERY: u8 = 1;
const PAD: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Slot {
    key: (i32, i32, i32),
    kind: u8,
    payload: u32,
}

impl Slot {
    const SENTINEL: Slot = Slot { key: (i32::MAX, i32::MAX, i32::MAX), kind: PAD, payload: 0 };
}

/// The sorter unit. Counts one invocation per window sorted.
#[derive(Debug)]
pub struct MergeSorter {
    len: usize,
    invocations: u64,
    window: Vec<Slot>,
}

impl MergeSorter {
    pub fn new(len: usize) -> Self {
        assert!(len >= 2 && len.is_power_of_two());
        Self { len, invocations: 0, window: Vec::with_capacity(len) }
    }

    pub fn invocations(&self) -> u64 {
        self.invocations
    }

    /// Finds every `(query, candidate)` pair sharing a coordinate and calls
    /// `hit(query_payload, candidate_payload)` for each.
    ///
    /// Queries are split into chunks of at most half a window, candidates fill
    /// the rest; every query chunk meets every candidate chunk once. Queries
    /// must be pairwise distinct, as must candidates.
    pub fn intersect(
        &mut self,
        queries: &[(VoxelCoord, u32)],
        candidates: &[(VoxelCoord, u32)],
        mut hit: impl FnMut(u32, u32),
    ) {
        if queries.is_empty() || candidates.is_empty() {
            return;
        }
        let q_chunk = queries.len().min(self.len / 2).max(1);
        for qs in queries.chunks(q_chunk) {
            let c_chunk = self.len - qs.len();
            for cs in candidates.chunks(c_chunk) {
                self.window.clear();
                self.window.extend(qs.iter().map(|&(c, p)| Slot { key: c.key(), kind: QUERY, payload: p }));
                self.window.extend(cs.iter().map(|&(c, p)| Slot { key: c.key(), kind: CANDIDATE, payload: p }));
                self.window.resize(self.len, Slot::SENTINEL);
                bitonic_sort(&mut self.window);
                self.invocations += 1;
                for w in self.window.windows(2) {
                    if w[0].key == w[1].key && w[0].kind == CANDIDATE && w[1].kind == QUERY {
                        hit(w[1].payload, w[0].payload);
                    }
                }
            }
        }
    }
}
