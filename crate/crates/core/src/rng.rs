//! Counter-based seed derivation.
//!
//! Every random draw in the crate is addressed by `(seed, domain, instance,
//! index)`. A draw's generator depends only on that address, never on which
//! thread evaluates it or in what order, so serial and parallel runs agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates draws made for different purposes under the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Prediction = 1,
    Certification = 2,
    Training = 3,
    Attack = 4,
    Simulation = 5,
    Dataset = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one 64-bit seed.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// A stream of independent generators for one `(seed, domain, instance)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    seed: u64,
    domain: Domain,
    instance: u64,
}

impl SampleStream {
    pub fn new(seed: u64, domain: Domain, instance: u64) -> Self {
        Self {
            seed,
            domain,
            instance,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn instance(&self) -> u64 {
        self.instance
    }

    /// Same seed and instance, different purpose.
    pub fn with_domain(self, domain: Domain) -> Self {
        Self { domain, ..self }
    }

    /// Generator for the `index`-th draw of this stream.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix(&[self.seed, self.domain as u64, self.instance, index]))
    }
}
