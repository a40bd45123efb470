//! Named random sub-streams derived from a single run seed.
//!
//! Every consumer of randomness draws from its own ChaCha stream so that,
//! for a given seed, changing how one component uses randomness never shifts
//! the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    ThresholdTies,
    RandomProjection,
    CvShuffles,
    DiameterSampling,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::ThresholdTies => 1,
            Stream::RandomProjection => 2,
            Stream::CvShuffles => 3,
            Stream::DiameterSampling => 4,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
