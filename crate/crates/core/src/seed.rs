//! Pure seed derivation. Every random stream in a run is keyed by a path of
//! integers below a root seed, so records can be replayed exactly.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `path` into `root` with a SplitMix64 finalizer per component.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(root.wrapping_add(GOLDEN)), |acc, &p| {
        mix(acc ^ mix(p.wrapping_add(GOLDEN)))
    })
}

/// Stream tags separating the different consumers of randomness.
pub mod stream {
    pub const EPISODE: u64 = 1;
    pub const POLICY: u64 = 2;
    pub const REQUEST: u64 = 3;
    pub const ROBUSTNESS: u64 = 4;
}
