use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::CimError;
use crate::mapsearch::InOutMap;
use crate::tensor::{kernel_offsets, KernelOffset, KernelSpec};

/// Pair count per kernel offset, with the copy factor each offset runs on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadHistogram {
    pub offsets: Vec<KernelOffset>,
    pub pairs: Vec<u64>,
    pub copies: Vec<u32>,
}

impl WorkloadHistogram {
    /// A histogram with one copy per offset.
    pub fn new(offsets: Vec<KernelOffset>, pairs: Vec<u64>) -> Result<Self, CimError> {
        if offsets.len() != pairs.len() {
            return Err(CimError::Histogram(format!("{} offsets but {} counts", offsets.len(), pairs.len())));
        }
        let copies = vec![1; pairs.len()];
        Ok(Self { offsets, pairs, copies })
    }

    /// Plain counts without offset geometry, indexed `0..n`.
    pub fn from_counts(pairs: Vec<u64>) -> Self {
        let offsets = (0..pairs.len() as i32).map(|i| KernelOffset::new(i, 0, 0)).collect();
        let copies = vec![1; pairs.len()];
        Self { offsets, pairs, copies }
    }

    pub fn with_copies(mut self, copies: Vec<u32>) -> Result<Self, CimError> {
        if copies.len() != self.pairs.len() {
            return Err(CimError::Histogram(format!("{} copy factors for {} offsets", copies.len(), self.pairs.len())));
        }
        if let Some(o) = self.pairs.iter().zip(&copies).position(|(&p, &c)| p > 0 && c == 0) {
            return Err(CimError::Uncovered { offset: o as u32 });
        }
        self.copies = copies;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_pairs(&self) -> u64 {
        self.pairs.iter().sum()
    }

    pub fn nonzero_offsets(&self) -> usize {
        self.pairs.iter().filter(|&&p| p > 0).count()
    }

    /// `pairs / copies`; zero for idle offsets.
    pub fn normalized(&self, offset: usize) -> f64 {
        match (self.pairs[offset], self.copies[offset]) {
            (0, _) | (_, 0) => 0.0,
            (p, c) => p as f64 / c as f64,
        }
    }

    pub fn max_normalized(&self) -> f64 {
        (0..self.len()).map(|o| self.normalized(o)).fold(0.0, f64::max)
    }

    /// Max over min of the nonzero raw pair counts; 0 when nothing is nonzero.
    pub fn max_min_ratio(&self) -> f64 {
        ratio(self.pairs.iter().filter(|&&p| p > 0).map(|&p| p as f64))
    }

    /// Max over min of the nonzero normalized workloads.
    pub fn normalized_max_min_ratio(&self) -> f64 {
        ratio((0..self.len()).map(|o| self.normalized(o)).filter(|&w| w > 0.0))
    }
}

fn ratio(it: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = it.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi == 0.0 {
        0.0
    } else {
        hi / lo
    }
}

/// Counts the IN-OUT pairs that use each kernel offset.
pub fn workload_histogram(map: &InOutMap, spec: &KernelSpec) -> WorkloadHistogram {
    WorkloadHistogram::new(kernel_offsets(spec), map.offset_counts(spec.volume())).expect("lengths agree")
}

/// `pairs / copies` compared exactly by cross multiplication.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Load {
    pairs: u64,
    copies: u64,
    offset: usize,
}

impl Ord for Load {
    fn cmp(&self, other: &Self) -> Ordering {
        ((self.pairs as u128) * other.copies as u128)
            .cmp(&((other.pairs as u128) * self.copies as u128))
            .then_with(|| other.offset.cmp(&self.offset))
    }
}

impl PartialOrd for Load {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy weight-workload balancing.
///
/// Every offset with pairs gets one copy, then each remaining slot goes to the
/// offset with the largest `pairs / copies`, lowest index first on ties.
/// Offsets without pairs get no copies.
pub fn w2b_optimize(hist: &WorkloadHistogram, pe_budget: u64) -> Result<Vec<u32>, CimError> {
    let needed = hist.nonzero_offsets() as u64;
    if pe_budget < needed {
        return Err(CimError::Budget { budget: pe_budget, needed });
    }
    let mut copies: Vec<u32> = hist.pairs.iter().map(|&p| u32::from(p > 0)).collect();
    let mut heap: BinaryHeap<Load> = hist
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(offset, &pairs)| Load { pairs, copies: 1, offset })
        .collect();
    for _ in needed..pe_budget {
        let Some(mut top) = heap.pop() else { break };
        top.copies += 1;
        copies[top.offset] += 1;
        heap.push(top);
    }
    Ok(copies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapsearch::oracle_search;
    use crate::tensor::{CoordSet, GridShape, SparseTensor};

    #[test]
    fn forty_one_one() {
        let h = WorkloadHistogram::from_counts(vec![40, 1, 1]);
        let c = w2b_optimize(&h, 6).unwrap();
        assert_eq!(c, [4, 1, 1]);
        assert_eq!(h.with_copies(c).unwrap().max_normalized(), 10.0);
    }

    #[test]
    fn uniform_budget_equal_to_offsets() {
        let h = WorkloadHistogram::from_counts(vec![5; 27]);
        assert_eq!(w2b_optimize(&h, 27).unwrap(), vec![1; 27]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let h = WorkloadHistogram::from_counts(vec![6, 6, 6]);
        assert_eq!(w2b_optimize(&h, 4).unwrap(), [2, 1, 1]);
    }

    #[test]
    fn budget_error() {
        let h = WorkloadHistogram::from_counts(vec![3, 0, 2]);
        assert!(matches!(w2b_optimize(&h, 1), Err(CimError::Budget { budget: 1, needed: 2 })));
        assert_eq!(w2b_optimize(&h, 2).unwrap(), [1, 0, 1]);
    }

    #[test]
    fn full_dense_interior_is_flat() {
        let shape = GridShape::cube(6);
        let set = CoordSet::new(shape, (0..216).map(|i| shape.coord_of(i)).collect()).unwrap();
        let t = SparseTensor::occupancy(set.clone());
        let h = workload_histogram(&oracle_search(&t, &set, &KernelSpec::subm(3)), &KernelSpec::subm(3));
        assert_eq!(h.total_pairs(), h.pairs.iter().sum::<u64>());
        // every offset loses exactly one face layer of outputs
        assert!(h.pairs.iter().all(|&p| p >= 5 * 5 * 5));
        assert_eq!(h.pairs[13], 216);
    }

    #[test]
    fn empty_map_is_all_zero() {
        let h = workload_histogram(&InOutMap::empty(), &KernelSpec::subm(3));
        assert_eq!(h.pairs, vec![0; 27]);
        assert_eq!(h.max_min_ratio(), 0.0);
    }
}
