//! Deterministic seed derivation.
//!
//! Every stochastic stage (synthetic sampling, fold shuffles, SMO, k-means
//! restarts, subsampling) takes a `u64` seed derived from the run seed and a
//! fixed stream tag, so results are reproducible across platforms and do not
//! depend on hash-map iteration or thread scheduling.

/// SplitMix64 finalizer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and a stream tag.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream))
}
