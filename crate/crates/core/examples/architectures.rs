//! Prints the three architectures at full input length: conv output lengths,
//! parameter blocks and feature widths.
//!
//!     cargo run --example architectures

use std::error::Error;

use pdfcnn::models::{ArchSpec, ArchitectureId, Network};
use pdfcnn::ByteSequence;

fn main() -> Result<(), Box<dyn Error>> {
    for arch in [ArchitectureId::A, ArchitectureId::B, ArchitectureId::C] {
        let spec = ArchSpec::production(arch);
        let net = Network::build(spec.clone(), 0)?;
        let params: usize = net.parameters().iter().map(|b| b.len()).sum();
        println!("model {arch}: input {} bytes, {params} parameters", spec.input_len);
        for (conv, len) in spec.convs.iter().zip(spec.conv_lengths()?) {
            println!(
                "  conv window {:>2} stride {} kernels {:>3} -> {len} positions",
                conv.window, conv.stride, conv.kernels
            );
        }
        let features = net.features(&ByteSequence::from_bytes(b"%PDF-1.7", spec.input_len))?;
        println!("  pooled feature width {}", features.len());
    }
    Ok(())
}
