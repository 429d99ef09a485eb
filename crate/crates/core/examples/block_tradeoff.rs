//! Block partition against depth-table size and access volume.

use spvox::mapsearch::{block_doms_search, BufferConfig};
use spvox::tensor::{GridShape, KernelSpec};
use spvox::toolkit::{generate_scene, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a quarter of the high-resolution grid keeps this quick
    let t = generate_scene(&SceneSpec::uniform(GridShape::new(701, 800, 41)?, 0.005, 1))?;
    let buf = BufferConfig::new(64, 64, 512, 64)?;
    println!("N = {}", t.len());
    println!("{:>6} {:>8} {:>8} {:>10}", "grid", "table", "norm", "replicated");
    for grid in [(1, 1), (1, 2), (2, 2), (2, 4), (2, 8), (4, 8), (8, 8)] {
        let (_, s) = block_doms_search(&t, &t, &KernelSpec::subm(3), &buf, grid)?;
        println!(
            "{:>6} {:>8} {:>8.4} {:>9.3}%",
            format!("{}x{}", grid.0, grid.1),
            s.table_size_entries,
            s.normalized_access,
            100.0 * s.replicated_fraction()
        );
    }
    Ok(())
}
