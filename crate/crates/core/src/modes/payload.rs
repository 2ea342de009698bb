use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Characters payloads are drawn from: valid in every mode, including Morse.
pub const CHARSET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ";

pub const DEFAULT_PAYLOAD_CHARS: usize = 16_384;

/// Seeded random text payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub seed: u64,
    pub length_chars: usize,
}

impl Payload {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            length_chars: DEFAULT_PAYLOAD_CHARS,
        }
    }

    pub fn with_length(seed: u64, length_chars: usize) -> Self {
        Self { seed, length_chars }
    }

    /// The payload text; identical for identical seeds.
    pub fn text(&self) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let cs = CHARSET.as_bytes();
        (0..self.length_chars.max(1))
            .map(|_| cs[rng.random_range(0..cs.len())])
            .collect()
    }

    /// Endless character stream cycling through [`Payload::text`].
    pub fn chars(&self) -> impl Iterator<Item = u8> {
        self.text().into_iter().cycle()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_charset() {
        let a = Payload::with_length(7, 500).text();
        let b = Payload::with_length(7, 500).text();
        assert_eq!(a, b);
        assert_ne!(a, Payload::with_length(8, 500).text());
        assert!(a.iter().all(|c| CHARSET.as_bytes().contains(c)));
    }
}
