use proptest::prelude::*;
use spvox::mapsearch::{oracle_search, run_search, BufferConfig, SearchMethod};
use spvox::spconv::{chain_layers, dense_oracle, execute_spconv, ChainOptions, WeightTensor};
use spvox::tensor::{GridShape, KernelSpec, SparseTensor};
use spvox::toolkit::{generate_scene, SceneSpec};

fn featured(n: u32, p: f64, seed: u64, ch: usize) -> SparseTensor {
    let t = generate_scene(&SceneSpec::uniform(GridShape::cube(n), p, seed)).unwrap();
    let feats = (0..t.len() * ch).map(|i| (((i as u64).wrapping_mul(2654435761) ^ seed) % 2001) as f64 / 1000.0 - 1.0);
    t.with_features(ch, feats.collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_in_features(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = featured(10, 0.1, seed, 3);
        let g = featured(10, 0.1, seed, 3);
        let g = g.with_features(3, g.features().iter().map(|v| v * 0.5 + 0.1).collect()).unwrap();
        let spec = KernelSpec::subm(3);
        let set = f.coord_set();
        let map = oracle_search(&set, &set, &spec);
        let w = WeightTensor::random(3, 3, 2, seed ^ 1).unwrap();
        let mix = f.with_features(3, f.features().iter().zip(g.features()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let lhs = execute_spconv(&mix, &set, &map, &w).unwrap();
        let ef = execute_spconv(&f, &set, &map, &w).unwrap();
        let eg = execute_spconv(&g, &set, &map, &w).unwrap();
        for ((l, x), y) in lhs.features().iter().zip(ef.features()).zip(eg.features()) {
            prop_assert!((l - (a * x + b * y)).abs() <= 1e-6);
        }
    }

    #[test]
    fn output_independent_of_map_source(seed in any::<u64>(), quantized in any::<bool>()) {
        let f = featured(12, 0.08, seed, 2);
        let set = f.coord_set();
        let spec = KernelSpec::subm(3);
        let mut w = WeightTensor::random(3, 2, 3, seed).unwrap();
        if quantized {
            w = w.quantize();
        }
        let reference = execute_spconv(&f, &set, &oracle_search(&set, &set, &spec), &w).unwrap();
        for m in [SearchMethod::WeightMajor, SearchMethod::OutputMajor, SearchMethod::Doms, SearchMethod::BlockDoms] {
            let map = run_search(m, &set, &set, &spec, &BufferConfig::new(4, 4, 8, 2).unwrap(), (2, 3)).unwrap().map;
            let out = execute_spconv(&f, &set, &map, &w).unwrap();
            // bit-identical, not merely close
            let same = out.features().iter().zip(reference.features()).all(|(x, y)| x.to_bits() == y.to_bits());
            prop_assert!(same, "{}", m);
        }
    }

    #[test]
    fn chain_matches_dense_and_restores_coords(seed in any::<u64>(), n in 4u32..14, quantized in any::<bool>()) {
        let x = featured(n, 0.12, seed, 2);
        let mut layers = vec![
            (KernelSpec::subm(3), WeightTensor::random(3, 2, 3, seed).unwrap()),
            (KernelSpec::generalized(2, 2), WeightTensor::random(2, 3, 3, seed + 1).unwrap()),
            (KernelSpec::transposed(2, 2), WeightTensor::random(2, 3, 2, seed + 2).unwrap()),
        ];
        if quantized {
            layers.iter_mut().for_each(|(_, w)| *w = w.quantize());
        }
        let out = chain_layers(&layers, &x, &ChainOptions { trace: true, ..ChainOptions::default() }).unwrap();
        prop_assert_eq!(out.output.coords(), x.coords());
        let tol = if quantized { 0.0 } else { 1e-6 };
        let mut prev = &x;
        for ((spec, w), got) in layers.iter().zip(&out.intermediates) {
            let targets = (spec.variant() == spvox::tensor::ConvVariant::Transposed).then(|| x.coord_set());
            let diff = dense_oracle(prev, spec, w, targets.as_ref()).unwrap().max_abs_diff(got).unwrap();
            prop_assert!(diff <= tol, "{} diff {}", spec, diff);
            prev = got;
        }
    }
}
