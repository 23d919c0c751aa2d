//! Seed fan-out.
//!
//! A single global seed is expanded into per-component seeds with
//! `derive(global, component, index)`, a SplitMix64 finalizer applied to the
//! global seed mixed with a component tag and a counter. Partial reruns of one
//! component therefore reproduce without replaying the others.

/// Component tags used with [`derive`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    Synth = 1,
    Split = 2,
    Train = 3,
    Forest = 4,
    Dropout = 5,
    Shuffle = 6,
    Init = 7,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(global: u64, component: Component, index: u64) -> u64 {
    let tagged = splitmix64(global ^ (component as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(tagged ^ splitmix64(index))
}

/// Mixes an arbitrary list of counters into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x2545_F491_4F6C_DD1D, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
