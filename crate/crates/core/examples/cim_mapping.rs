//! Traditional against sub-matrix weight mapping, and 2D feature reuse.

use spvox::cimmodel::{conv2d_reuse_cycles, layout_submatrix, layout_traditional, CimGeometry, CimKernel};
use spvox::tensor::KernelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geom = CimGeometry::default();
    for (c1, c2) in [(16, 16), (32, 64), (64, 64)] {
        let t = layout_traditional(KernelSpec::subm(3), c1, c2, &geom)?;
        let s = layout_submatrix(KernelSpec::subm(3), c1, c2, &geom, &[1; 27])?;
        println!(
            "C1={c1:<3} C2={c2:<3} traditional: {} folds, {} PEs | sub-matrix: {} blocks of {}x{}, {} PEs",
            t.row_folds,
            t.pes_used,
            s.placements.len(),
            s.block_rows,
            s.block_cols,
            s.pes_used
        );
    }
    let layout = layout_submatrix(CimKernel::Conv2d { size: 3 }, 64, 64, &geom, &[1; 9])?;
    let r = conv2d_reuse_cycles(64, 64, 64, 3, &layout)?;
    println!(
        "conv2d 3x3 on 64x64: {} fetches vs {} naive ({:.2}x reuse), {} cycles",
        r.fetches, r.naive_fetches, r.reuse_factor, r.cycles
    );
    Ok(())
}
