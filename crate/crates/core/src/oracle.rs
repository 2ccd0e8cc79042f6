//! Seeded stand-in for a random oracle on bit strings of length at most 64.
//!
//! A string of length `L` with binary value `v` (first bit most significant)
//! is answered by bit `v mod 32` of 32-bit word `v / 32` in the ChaCha20
//! keystream number `L`. Each length therefore owns its own stream, and
//! consecutive values read consecutive keystream bits, which makes whole truth
//! tables cheap to extract.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{LabError, Result};
use crate::rng::derive_key;

/// Longest string the oracle answers.
pub const MAX_STRING_BITS: usize = 64;

/// A bit string of length at most 64, stored as its binary value.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    len: u8,
    value: u64,
}

impl BitString {
    pub fn new(len: usize, value: u64) -> Result<Self> {
        if len > MAX_STRING_BITS {
            return Err(LabError::CapExceeded {
                what: format!("oracle string length {len}"),
                cap: MAX_STRING_BITS,
            });
        }
        if len < 64 && value >> len != 0 {
            return Err(LabError::InvalidParameter(format!(
                "value {value} does not fit in {len} bits"
            )));
        }
        Ok(Self {
            len: len as u8,
            value,
        })
    }

    /// Builds a string from bits, first bit most significant.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() > MAX_STRING_BITS {
            return Err(LabError::CapExceeded {
                what: format!("oracle string length {}", bits.len()),
                cap: MAX_STRING_BITS,
            });
        }
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
        Ok(Self {
            len: bits.len() as u8,
            value,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len())
            .rev()
            .map(|i| (self.value >> i) & 1 == 1)
            .collect()
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .bits()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        write!(f, "BitString({s:?})")
    }
}

/// Deterministic random oracle keyed by a master seed.
#[derive(Clone)]
pub struct RandomOracle {
    seed: u64,
    key: [u8; 32],
}

impl fmt::Debug for RandomOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RandomOracle")
            .field("seed", &self.seed)
            .finish()
    }
}

impl RandomOracle {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            key: derive_key(seed, "oracle"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn reader(&self, len: usize, start: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.key);
        rng.set_stream(len as u64);
        rng.set_word_pos(u128::from(start / 32));
        rng
    }

    /// Raw oracle bit; `true` corresponds to the answer `-1`.
    pub fn bit(&self, x: BitString) -> bool {
        let word = self.reader(x.len(), x.value).next_u32();
        (word >> (x.value % 32)) & 1 == 1
    }

    /// Oracle answer in `{±1}`.
    pub fn eval(&self, x: BitString) -> i8 {
        if self.bit(x) {
            -1
        } else {
            1
        }
    }

    /// Answers for the `count` consecutive strings of length `len` starting
    /// at value `start`, packed least-significant-bit first into `u64` words.
    pub fn bit_block(&self, len: usize, start: u64, count: usize) -> Result<Vec<u64>> {
        if len > MAX_STRING_BITS {
            return Err(LabError::CapExceeded {
                what: format!("oracle string length {len}"),
                cap: MAX_STRING_BITS,
            });
        }
        if count > 0 {
            let last = start.checked_add(count as u64 - 1);
            if len < 64 && last.is_none_or(|l| l >> len != 0) {
                return Err(LabError::InvalidParameter(format!(
                    "block of {count} from {start} leaves {len}-bit strings"
                )));
            }
        }
        let mut rng = self.reader(len, start);
        let mut out = vec![0u64; count.div_ceil(64)];
        let offset = (start % 32) as u32;
        let mut current = u64::from(rng.next_u32()) >> offset;
        let mut available = 32 - offset;
        let mut filled = 0usize;
        while filled < count {
            if available == 0 {
                current = u64::from(rng.next_u32());
                available = 32;
            }
            let take = (available as usize)
                .min(count - filled)
                .min(64 - filled % 64);
            let mask = if take == 64 {
                u64::MAX
            } else {
                (1u64 << take) - 1
            };
            out[filled / 64] |= (current & mask) << (filled % 64);
            current >>= take;
            available -= take as u32;
            filled += take;
        }
        Ok(out)
    }
}
