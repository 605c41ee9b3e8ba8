//! Deterministic, hand-checkable shuffling.
//!
//! Every sampling step in the toolkit is a Fisher–Yates shuffle driven by a
//! splitmix64 stream. The stream is keyed by a string identifier (dataset or
//! volume id) and an integer seed:
//!
//! ```text
//! state0 = fnv1a64(utf8(id)) XOR seed
//! ```
//!
//! Shuffling walks `i = n-1 ..= 1`, draws `j = next() % (i + 1)` and swaps
//! positions `i` and `j`.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// The splitmix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    /// Stream keyed by `(id, seed)`.
    pub fn keyed(id: &str, seed: u64) -> Self {
        Self::new(fnv1a64(id.as_bytes()) ^ seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Permutation of `0..n` for the stream keyed by `(id, seed)`.
pub fn keyed_permutation(n: usize, id: &str, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut idx, &mut SplitMix64::keyed(id, seed));
    idx
}

/// `ceil(fraction * n)`, at least 1 and at most `n`.
///
/// A 1e-9 slack absorbs products like `0.7 * 10 = 7.000000000000001`.
pub fn ceil_count(fraction: f64, n: usize) -> usize {
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Fold a sequence of integers into one well-mixed seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN_GAMMA, |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN_GAMMA) ^ mix64(p))
    })
}
