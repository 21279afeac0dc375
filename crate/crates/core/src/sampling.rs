//! Seeded Haar sampling of pure states and the undistillable-fraction
//! statistic. Sample `i` draws from its own substream of the master seed, so
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::haar_random_pure;
use crate::pure_state::{fidelity_pure, zero_error_distillable_pure};

/// One step of the splitmix64 generator.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for task `index` under `master`.
pub fn substream(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaarRecord {
    pub sample_index: u64,
    pub max_prob: f64,
    /// `log₂⌊1/max_prob⌋`.
    pub zero_error_bits: f64,
    pub fidelity_at_2: f64,
}

/// Sample `index` of the Haar experiment in dimension `d`.
pub fn haar_record(d: usize, master: u64, index: u64) -> Result<HaarRecord> {
    let psi = haar_random_pure(d, &mut substream(master, index));
    Ok(HaarRecord {
        sample_index: index,
        max_prob: psi.max_probability(),
        zero_error_bits: zero_error_distillable_pure(&psi),
        fidelity_at_2: fidelity_pure(&psi, 2)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaarSummary {
    pub dim: usize,
    pub samples: usize,
    /// Fraction of samples with a zero-error rate of at least one bit.
    pub fraction: f64,
    /// `1 − d·2^{1−d}`.
    pub expected: f64,
    /// `√(f(1 − f)/N)` at the observed fraction.
    pub standard_error: f64,
}

impl HaarSummary {
    pub fn from_records(dim: usize, records: &[HaarRecord]) -> Self {
        let n = records.len();
        let hits = records.iter().filter(|r| r.zero_error_bits >= 1.0).count();
        let fraction = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        Self {
            dim,
            samples: n,
            fraction,
            expected: expected_distillable_fraction(dim),
            standard_error: if n == 0 { 0.0 } else { (fraction * (1.0 - fraction) / n as f64).sqrt() },
        }
    }
}

/// Haar probability that `max_i |ψ_i|² ≤ 1/2`: `1 − d·2^{1−d}`.
pub fn expected_distillable_fraction(d: usize) -> f64 {
    1.0 - d as f64 * 2f64.powi(1 - d as i32)
}
