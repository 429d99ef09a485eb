//! JSON and binary round trips for tensors and weights.

use spvox::spconv::io::{read_weights_binary, weights_to_json, write_weights_binary};
use spvox::spconv::WeightTensor;
use spvox::tensor::{io, GridShape};
use spvox::toolkit::{generate_scene, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = generate_scene(&SceneSpec::uniform(GridShape::cube(32), 0.01, 5))?;
    let json = io::to_json(&t);
    let mut bin = Vec::new();
    io::write_binary(&t, &mut bin)?;
    assert_eq!(io::from_json(&json)?, t);
    assert_eq!(io::read_binary(bin.as_slice())?, t);
    println!("tensor: {} voxels, {} JSON bytes, {} binary bytes", t.len(), json.len(), bin.len());

    let w = WeightTensor::random(3, 4, 8, 9)?.quantize();
    let mut wbin = Vec::new();
    write_weights_binary(&w, &mut wbin)?;
    assert_eq!(read_weights_binary(wbin.as_slice())?, w);
    println!("weights: {} JSON bytes, {} binary bytes", weights_to_json(&w).len(), wbin.len());
    Ok(())
}
