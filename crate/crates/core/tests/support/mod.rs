//! Oracles shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod corpus;
pub mod gradcheck;
pub mod oracles;

/// Below this norm a finite-difference gradient is indistinguishable from
/// rounding noise (about `eps / h` for `h = 1e-6`).
pub const NOISE_FLOOR: f64 = 1e-8;

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, or 0 when both vectors are below
/// [`NOISE_FLOOR`]. Structurally zero gradients, such as a conv bias feeding
/// batch norm, land in the second case.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale <= NOISE_FLOOR {
        0.0
    } else {
        norm(&diff) / scale
    }
}
