//! Every search method on one scene, checked against the oracle.

use spvox::mapsearch::{oracle_search, run_search, BufferConfig, SearchMethod};
use spvox::tensor::{GridShape, KernelSpec};
use spvox::toolkit::{generate_scene, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = generate_scene(&SceneSpec::uniform(GridShape::new(352, 400, 10)?, 0.005, 1))?;
    let spec = KernelSpec::subm(3);
    let buf = BufferConfig::new(64, 64, 1600, 64)?;
    let oracle = oracle_search(&t, &t, &spec);
    println!("N = {}, pairs = {}", t.len(), oracle.len());
    println!("{:<14} {:>10} {:>10} {:>10}", "method", "reads", "norm", "sorter");
    for method in SearchMethod::ALL.into_iter().filter(|m| *m != SearchMethod::Oracle) {
        let out = run_search(method, &t, &t, &spec, &buf, (2, 4))?;
        assert_eq!(out.map, oracle, "{method} disagrees with the oracle");
        let s = out.stats.expect("traffic is reported");
        println!(
            "{:<14} {:>10} {:>10.3} {:>10}",
            method.to_string(),
            s.offchip_coord_reads,
            s.normalized_access,
            s.sorter_invocations
        );
    }
    Ok(())
}
