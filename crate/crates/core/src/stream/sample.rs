use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{PerceptionStream, WindowSample};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("window length must be positive")]
    ZeroLength,
    #[error("per_length must be positive")]
    ZeroPerLength,
    #[error("window length {length} exceeds stream length {stream_len}")]
    LengthTooLong { length: usize, stream_len: usize },
    #[error("{requested} windows of length {length} requested but only {available} placements exist")]
    NotEnoughPlacements { length: usize, requested: usize, available: usize },
}

/// Draws `per_length` windows of every requested length.
///
/// Offsets for each length are sampled uniformly without replacement from a
/// ChaCha8 stream seeded by `seed` and the length, then sorted ascending.
/// The output is grouped by length in the order given.
pub fn sample_windows(
    stream: &PerceptionStream,
    lengths: &[usize],
    per_length: usize,
    seed: u64,
) -> Result<Vec<WindowSample>, SampleError> {
    if per_length == 0 {
        return Err(SampleError::ZeroPerLength);
    }
    let n = stream.len();
    let mut out = Vec::with_capacity(lengths.len() * per_length);
    for &length in lengths {
        if length == 0 {
            return Err(SampleError::ZeroLength);
        }
        if length > n {
            return Err(SampleError::LengthTooLong { length, stream_len: n });
        }
        let available = n - length + 1;
        if per_length > available {
            return Err(SampleError::NotEnoughPlacements { length, requested: per_length, available });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (length as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut offsets = index::sample(&mut rng, available, per_length).into_vec();
        offsets.sort_unstable();
        out.extend(offsets.into_iter().map(|o| stream.window(o, length)));
    }
    Ok(out)
}
