//! Shared fixtures for the benchmarks.

use coherence_core::linalg::haar_random_pure;
use coherence_core::sampling::substream;
use coherence_core::StateVector;

/// Master seed of every benchmark fixture.
pub const FIXTURE_SEED: u64 = 0x000b_e9c4;

/// A fixed Haar-random pure state of dimension `d`.
pub fn haar_fixture(d: usize) -> StateVector {
    haar_random_pure(d, &mut substream(FIXTURE_SEED, d as u64))
}
