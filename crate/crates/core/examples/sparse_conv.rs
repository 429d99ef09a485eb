//! A subm / gconv / tconv chain, each layer checked against dense convolution.

use spvox::spconv::{chain_layers, dense_oracle, ChainOptions, WeightTensor};
use spvox::tensor::{ConvVariant, GridShape, KernelSpec};
use spvox::toolkit::{generate_scene, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let input = generate_scene(&SceneSpec::uniform(GridShape::cube(16), 0.05, 3))?;
    let layers = vec![
        (KernelSpec::subm(3), WeightTensor::random(3, 1, 4, 1)?),
        (KernelSpec::subm(3), WeightTensor::random(3, 4, 4, 2)?),
        (KernelSpec::generalized(2, 2), WeightTensor::random(2, 4, 8, 3)?),
        (KernelSpec::transposed(2, 2), WeightTensor::random(2, 8, 2, 4)?),
    ];
    let out = chain_layers(&layers, &input, &ChainOptions { trace: true, ..ChainOptions::default() })?;
    for (i, ((spec, w), (report, result))) in layers.iter().zip(out.layers.iter().zip(&out.intermediates)).enumerate() {
        let layer_in = if i == 0 { &input } else { &out.intermediates[i - 1] };
        let targets = (spec.variant() == ConvVariant::Transposed).then(|| result.coord_set());
        let diff = dense_oracle(layer_in, spec, w, targets.as_ref())?.max_abs_diff(result)?;
        println!(
            "{}{} s{}: {:>4} outputs, {:>5} pairs, map reused {:<5} dense diff {diff:.2e}",
            spec.variant(),
            spec.size(),
            spec.stride(),
            report.outputs,
            report.pairs,
            report.map_reused
        );
    }
    Ok(())
}
