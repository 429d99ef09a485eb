//! Hybrid map-search / compute schedule against running layers back to back.

use spvox::pipeline::{mark_shared_maps, schedule_hybrid, write_gantt_csv, LayerNode};
use spvox::tensor::KernelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut layers = vec![
        LayerNode::new("subm1", KernelSpec::subm(3), 40.0, 30.0),
        LayerNode::new("subm2", KernelSpec::subm(3), 40.0, 30.0),
        LayerNode::new("down", KernelSpec::generalized(2, 2), 12.0, 10.0),
        LayerNode::new("subm3", KernelSpec::subm(3), 15.0, 12.0),
        LayerNode::new("subm4", KernelSpec::subm(3), 15.0, 12.0),
    ];
    mark_shared_maps(&mut layers);
    for threshold in [0.0, 0.25, 0.5, 1.0] {
        let s = schedule_hybrid(&layers, threshold)?;
        println!(
            "threshold {threshold:.2}: makespan {:>6.1} sequential {:>6.1} ({:.2}x)",
            s.makespan,
            s.sequential,
            s.speedup()
        );
    }
    write_gantt_csv(&schedule_hybrid(&layers, 0.25)?, std::io::stdout())?;
    Ok(())
}
