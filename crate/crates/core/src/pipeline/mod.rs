//! Hybrid map-search / compute pipeline scheduling.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{ConvVariant, KernelSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("layer {index} ({id}) cannot share the previous layer's map")]
    InvalidSharing { index: usize, id: String },
    #[error("layer {index} ({id}) has a negative or non-finite latency")]
    InvalidLatency { index: usize, id: String },
    #[error("overlap threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerNode {
    pub id: String,
    pub spec: KernelSpec,
    /// Map-search time in abstract units.
    pub ms_latency: f64,
    /// Compute time in abstract units.
    pub compute_latency: f64,
    #[serde(default)]
    pub map_shared_with_prev: bool,
}

impl LayerNode {
    pub fn new(id: impl Into<String>, spec: KernelSpec, ms_latency: f64, compute_latency: f64) -> Self {
        Self { id: id.into(), spec, ms_latency, compute_latency, map_shared_with_prev: false }
    }

    pub fn sharing_map(mut self) -> Self {
        self.map_shared_with_prev = true;
        self
    }

    /// Map-search time actually spent: zero when the map is inherited.
    pub fn effective_ms(&self) -> f64 {
        if self.map_shared_with_prev {
            0.0
        } else {
            self.ms_latency
        }
    }
}

/// Whether `next` may reuse `prev`'s map: both submanifold with equal size and stride.
pub fn can_share_map(prev: &KernelSpec, next: &KernelSpec) -> bool {
    prev.variant() == ConvVariant::Submanifold
        && next.variant() == ConvVariant::Submanifold
        && prev.size() == next.size()
        && prev.stride() == next.stride()
}

/// Marks every layer that can inherit its predecessor's map.
pub fn mark_shared_maps(layers: &mut [LayerNode]) {
    for i in 1..layers.len() {
        let share = can_share_map(&layers[i - 1].spec, &layers[i].spec);
        layers[i].map_shared_with_prev = share;
    }
}

pub fn validate_layers(layers: &[LayerNode]) -> Result<(), PipelineError> {
    for (index, l) in layers.iter().enumerate() {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(l.ms_latency) || !ok(l.compute_latency) {
            return Err(PipelineError::InvalidLatency { index, id: l.id.clone() });
        }
        if l.map_shared_with_prev && (index == 0 || !can_share_map(&layers[index - 1].spec, &l.spec)) {
            return Err(PipelineError::InvalidSharing { index, id: l.id.clone() });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSlot {
    pub id: String,
    pub ms_start: f64,
    pub ms_end: f64,
    pub compute_start: f64,
    pub compute_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub slots: Vec<LayerSlot>,
    pub makespan: f64,
    /// Every layer's map search then compute, back to back.
    pub sequential: f64,
}

impl Schedule {
    pub fn speedup(&self) -> f64 {
        if self.makespan == 0.0 {
            1.0
        } else {
            self.sequential / self.makespan
        }
    }
}

/// Schedules map search and compute as two pipelined cores.
///
/// Map search of layer `i` starts when layer `i−1`'s search ends. Compute of
/// layer `i` starts once its predecessor's compute is done and
/// `overlap_threshold` of its own search has finished, and cannot end before
/// that search ends.
pub fn schedule_hybrid(layers: &[LayerNode], overlap_threshold: f64) -> Result<Schedule, PipelineError> {
    if !(0.0..=1.0).contains(&overlap_threshold) {
        return Err(PipelineError::InvalidThreshold(overlap_threshold));
    }
    validate_layers(layers)?;
    let mut slots = Vec::with_capacity(layers.len());
    let (mut ms_free, mut compute_free, mut sequential) = (0.0f64, 0.0f64, 0.0f64);
    for l in layers {
        let ms = l.effective_ms();
        let ms_start = ms_free;
        let ms_end = ms_start + ms;
        let compute_start = compute_free.max(ms_start + overlap_threshold * ms);
        let compute_end = (compute_start + l.compute_latency).max(ms_end);
        slots.push(LayerSlot { id: l.id.clone(), ms_start, ms_end, compute_start, compute_end });
        ms_free = ms_end;
        compute_free = compute_end;
        sequential += ms + l.compute_latency;
    }
    Ok(Schedule { slots, makespan: compute_free, sequential })
}

pub const GANTT_CSV_HEADER: [&str; 4] = ["layer", "stage", "start", "end"];

pub fn write_gantt_csv<W: Write>(schedule: &Schedule, out: W) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GANTT_CSV_HEADER)?;
    for s in &schedule.slots {
        w.serialize((&s.id, "ms", s.ms_start, s.ms_end))?;
        w.serialize((&s.id, "compute", s.compute_start, s.compute_end))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subm(id: &str, ms: f64, c: f64) -> LayerNode {
        LayerNode::new(id, KernelSpec::subm(3), ms, c)
    }

    #[test]
    fn one_layer_full_threshold() {
        let s = schedule_hybrid(&[subm("a", 3.0, 5.0)], 1.0).unwrap();
        assert_eq!(s.makespan, 8.0);
        assert_eq!(s.sequential, 8.0);
    }

    #[test]
    fn shared_map_costs_nothing() {
        let layers = [subm("a", 4.0, 4.0), subm("b", 4.0, 4.0).sharing_map()];
        let s = schedule_hybrid(&layers, 0.0).unwrap();
        assert_eq!(s.slots[1].ms_end - s.slots[1].ms_start, 0.0);
        assert_eq!(s.makespan, 8.0);
        assert!(s.makespan < 4.0 + 4.0 + 4.0 + 4.0);
    }

    #[test]
    fn four_layer_hand_schedule() {
        // ms:      a [0,4]  b [4,6]  c [6,9]  d [9,17]
        // compute: a max(0, 1) -> 4;  b max(4, 4.5) -> 7.5;  c max(7.5, 6.75) -> 9.5
        //          d max(9.5, 11) = 11, ends at max(12, 17) = 17
        let layers = [
            subm("a", 4.0, 3.0),
            LayerNode::new("b", KernelSpec::generalized(2, 2), 2.0, 3.0),
            LayerNode::new("c", KernelSpec::generalized(2, 2), 3.0, 2.0),
            subm("d", 8.0, 1.0),
        ];
        let s = schedule_hybrid(&layers, 0.25).unwrap();
        let ends: Vec<_> = s.slots.iter().map(|x| (x.compute_start, x.compute_end)).collect();
        assert_eq!(ends, [(1.0, 4.0), (4.5, 7.5), (7.5, 9.5), (11.0, 17.0)]);
        assert_eq!(s.makespan, 17.0);
        assert_eq!(s.sequential, 26.0);
    }

    #[test]
    fn invalid_sharing_rejected() {
        let layers = [LayerNode::new("a", KernelSpec::generalized(2, 2), 1.0, 1.0), subm("b", 1.0, 1.0).sharing_map()];
        assert!(matches!(schedule_hybrid(&layers, 0.5), Err(PipelineError::InvalidSharing { index: 1, .. })));
        assert!(schedule_hybrid(&[subm("a", 1.0, 1.0).sharing_map()], 0.5).is_err());
    }

    #[test]
    fn mark_shared_follows_kernels() {
        let mut layers =
            vec![subm("a", 1.0, 1.0), subm("b", 1.0, 1.0), LayerNode::new("c", KernelSpec::subm(5), 1.0, 1.0)];
        mark_shared_maps(&mut layers);
        assert_eq!(layers.iter().map(|l| l.map_shared_with_prev).collect::<Vec<_>>(), [false, true, false]);
    }

    #[test]
    fn bad_inputs() {
        assert!(schedule_hybrid(&[subm("a", -1.0, 1.0)], 0.5).is_err());
        assert!(schedule_hybrid(&[], 1.5).is_err());
        assert_eq!(schedule_hybrid(&[], 0.25).unwrap().makespan, 0.0);
    }

    #[test]
    fn gantt_rows() {
        let s = schedule_hybrid(&[subm("a", 2.0, 1.0)], 0.5).unwrap();
        let mut buf = Vec::new();
        write_gantt_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "layer,stage,start,end\na,ms,0.0,2.0\na,compute,1.0,2.0\n");
    }
}
