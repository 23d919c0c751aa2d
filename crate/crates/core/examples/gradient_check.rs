//! Compares backpropagated gradients of each architecture with central
//! finite differences on a miniature configuration.
//!
//!     cargo run --release --example gradient_check

use std::error::Error;

use pdfcnn::models::{ArchSpec, ArchitectureId, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-6;

fn main() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for arch in [ArchitectureId::A, ArchitectureId::B, ArchitectureId::C] {
        let spec = ArchSpec::miniature(arch);
        let net = Network::build(spec.clone(), 42)?;
        let batch: Vec<Vec<u8>> = (0..4).map(|_| (0..spec.input_len).map(|_| rng.gen()).collect()).collect();
        let inputs: Vec<&[u8]> = batch.iter().map(Vec::as_slice).collect();
        let targets = [1.0, 0.0, 1.0, 0.0];
        let (loss, grads) = net.clone().loss_and_gradients_layerwise(&inputs, &targets, None, 5)?;

        let mut worst: f64 = 0.0;
        for (b, block) in grads.blocks.iter().enumerate() {
            for _ in 0..8 {
                let i = rng.gen_range(0..block.len());
                let mut up = net.clone();
                up.parameters_mut()[b][i] += H;
                let mut down = net.clone();
                down.parameters_mut()[b][i] -= H;
                let numeric = (up.batch_loss(&inputs, &targets, None, 5)? - down.batch_loss(&inputs, &targets, None, 5)?) / (2.0 * H);
                let scale = numeric.abs().max(block[i].abs());
                if scale > 1e-8 {
                    worst = worst.max((numeric - block[i]).abs() / scale);
                }
            }
        }
        println!(
            "model {arch}: loss {loss:.5}, {} parameter blocks, worst relative error {worst:.2e}",
            grads.blocks.len()
        );
    }
    Ok(())
}
