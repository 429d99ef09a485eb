use proptest::prelude::*;
use spvox::pipeline::{mark_shared_maps, schedule_hybrid, LayerNode};
use spvox::tensor::KernelSpec;

fn layers_strategy() -> impl Strategy<Value = Vec<LayerNode>> {
    prop::collection::vec((0usize..3, 0.0f64..50.0, 0.0f64..50.0), 1..12).prop_map(|v| {
        let mut layers: Vec<LayerNode> = v
            .into_iter()
            .enumerate()
            .map(|(i, (kind, ms, c))| {
                let spec = [KernelSpec::subm(3), KernelSpec::generalized(2, 2), KernelSpec::transposed(2, 2)][kind];
                LayerNode::new(format!("l{i}"), spec, ms, c)
            })
            .collect();
        mark_shared_maps(&mut layers);
        layers
    })
}

proptest! {
    #[test]
    fn hybrid_never_slower_than_sequential(layers in layers_strategy(), t in 0.0f64..=1.0) {
        let s = schedule_hybrid(&layers, t).unwrap();
        prop_assert!(s.makespan <= s.sequential + 1e-9);
        for (w, l) in s.slots.windows(2).zip(&layers[1..]) {
            prop_assert!(w[1].ms_start >= w[0].ms_end);
            prop_assert!(w[1].compute_start >= w[0].compute_end);
            prop_assert!(w[1].compute_end >= w[1].ms_end);
            if l.map_shared_with_prev {
                prop_assert_eq!(w[1].ms_end, w[1].ms_start);
            }
        }
    }

    #[test]
    fn makespan_monotone_in_threshold(layers in layers_strategy(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(schedule_hybrid(&layers, lo).unwrap().makespan <= schedule_hybrid(&layers, hi).unwrap().makespan + 1e-9);
    }

    #[test]
    fn two_stage_lower_bound(lat in prop::collection::vec((0.0f64..50.0, 0.0f64..50.0), 1..12)) {
        // strided kernels never share maps
        let layers: Vec<_> = lat
            .iter()
            .enumerate()
            .map(|(i, &(ms, c))| LayerNode::new(format!("l{i}"), KernelSpec::generalized(2, 2), ms, c))
            .collect();
        let s = schedule_hybrid(&layers, 1.0).unwrap();
        let ms: f64 = lat.iter().map(|l| l.0).sum();
        let c: f64 = lat.iter().map(|l| l.1).sum();
        prop_assert!(s.makespan + 1e-9 >= ms.max(c));
    }
}

#[test]
fn second_subm_layer_reuses_map() {
    let mut layers = vec![
        LayerNode::new("a", KernelSpec::subm(3), 10.0, 10.0),
        LayerNode::new("b", KernelSpec::subm(3), 10.0, 10.0),
    ];
    mark_shared_maps(&mut layers);
    let s = schedule_hybrid(&layers, 0.0).unwrap();
    assert_eq!(s.slots[1].ms_end - s.slots[1].ms_start, 0.0);
    assert!(s.makespan < s.sequential);
}

#[test]
fn bad_threshold_rejected() {
    let l = [LayerNode::new("a", KernelSpec::subm(3), 1.0, 1.0)];
    assert!(schedule_hybrid(&l, 1.5).is_err());
    assert!(schedule_hybrid(&l, -0.1).is_err());
}
