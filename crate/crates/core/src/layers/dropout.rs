use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LayerError, Mode};

/// Inverted dropout. Returns the output and the per-element scale that was
/// applied (0 or `1/(1-p)`), which is also the backward multiplier.
pub fn dropout(v: &[f64], p: f64, mode: Mode, seed: u64) -> Result<(Vec<f64>, Vec<f64>), LayerError> {
    if !(0.0..1.0).contains(&p) {
        return Err(LayerError::InvalidProbability(p));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((v.to_vec(), vec![1.0; v.len()]));
    }
    let keep_scale = 1.0 / (1.0 - p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask: Vec<f64> = v
        .iter()
        .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep_scale })
        .collect();
    let out = v.iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((out, mask))
}
