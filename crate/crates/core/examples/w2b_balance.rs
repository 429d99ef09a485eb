//! Workload skew on a surface scene and what weight replication does to it.

use spvox::cimmodel::{layout_submatrix, spconv_cycles, w2b_optimize, workload_histogram, Batching, CimGeometry};
use spvox::mapsearch::oracle_search;
use spvox::tensor::KernelSpec;
use spvox::toolkit::{generate_scene, surface_scene};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = KernelSpec::subm(3);
    let t = generate_scene(&surface_scene(1))?;
    let map = oracle_search(&t, &t, &spec);
    let hist = workload_histogram(&map, &spec);
    println!("N = {}, pairs = {}, center/edge = {:.1}", t.len(), map.len(), hist.max_min_ratio());

    let geom = CimGeometry::default();
    let before = spconv_cycles(&map, &layout_submatrix(spec, 16, 16, &geom, &[1; 27])?, &Batching::default())?;
    for budget in [27, 40, 54, 108] {
        let copies = w2b_optimize(&hist, budget)?;
        let after = spconv_cycles(&map, &layout_submatrix(spec, 16, 16, &geom, &copies)?, &Batching::default())?;
        let balanced = hist.clone().with_copies(copies)?;
        println!(
            "budget {budget:>3}: cycles {:>5} -> {:>5} ({:.2}x), max/min workload {:.1}, utilization {:.2}",
            before.cycles,
            after.cycles,
            before.cycles as f64 / after.cycles as f64,
            balanced.normalized_max_min_ratio(),
            after.utilization
        );
    }
    Ok(())
}
