//! Stable seed derivation for reproducible experiment cells.
//!
//! Cell seeds must be identical across runs, platforms and compiler versions,
//! so hashing goes through an explicit FNV-1a rather than `std::hash`.

use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// One ingredient of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Num(u64),
    Str(&'a str),
}

impl<'a> From<u64> for SeedPart<'a> {
    fn from(v: u64) -> Self {
        SeedPart::Num(v)
    }
}

impl<'a> From<usize> for SeedPart<'a> {
    fn from(v: usize) -> Self {
        SeedPart::Num(v as u64)
    }
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(v: &'a str) -> Self {
        SeedPart::Str(v)
    }
}

/// FNV-1a over the parts, with a length prefix per part so that
/// `("ab", "c")` and `("a", "bc")` hash differently.
pub fn stable_hash(parts: &[SeedPart<'_>]) -> u64 {
    let mut h = FNV_OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    for part in parts {
        match part {
            SeedPart::Num(v) => {
                eat(&[0u8]);
                eat(&v.to_le_bytes());
            }
            SeedPart::Str(s) => {
                eat(&[1u8]);
                eat(&(s.len() as u64).to_le_bytes());
                eat(s.as_bytes());
            }
        }
    }
    h
}

/// Derives the seed of one experiment cell.
pub fn cell_seed(base_seed: u64, task_id: &str, method: &str, rep: usize) -> u64 {
    stable_hash(&[
        base_seed.into(),
        task_id.into(),
        method.into(),
        rep.into(),
    ])
}

/// Seeded RNG used everywhere randomness is needed; ChaCha keeps the stream
/// identical across platforms and `rand` upgrades.
pub type Rng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    ChaCha12Rng::seed_from_u64(seed)
}
