//! Seeded input generation shared by the verification CLI, tests and
//! examples. All sampling goes through a caller-provided RNG so reports are
//! reproducible from a seed.

use rand::Rng;
use refnum::RefInt;

/// Uniform value with exactly `bits` random bits (top bits zeroed).
pub fn random_bits<R: Rng>(rng: &mut R, bits: usize) -> RefInt {
    let mut words = vec![0u64; bits.div_ceil(64)];
    rng.fill(&mut words[..]);
    let extra = 64 * words.len() - bits;
    if extra > 0 {
        *words.last_mut().unwrap() >>= extra;
    }
    RefInt::from_words(&words)
}

/// Uniform value below `bound` (rejection sampling).
pub fn random_below<R: Rng>(rng: &mut R, bound: &RefInt) -> RefInt {
    assert!(!bound.is_zero());
    loop {
        let v = random_bits(rng, bound.bits());
        if v.cmp_ref(bound) == std::cmp::Ordering::Less {
            return v;
        }
    }
}

/// Random odd modulus in `(1, 2^bits)`, top bit set so sizes are realistic.
pub fn random_odd_modulus<R: Rng>(rng: &mut R, bits: usize) -> RefInt {
    let mut n = random_bits(rng, bits);
    // force top and bottom bits
    n = n
        .shr_bits(1)
        .shl_bits(1)
        .add(&RefInt::one())
        .add(&RefInt::pow2(bits - 1));
    n.mod_pow2(bits)
}

/// Little-endian words padded for a `bits`-bit container.
pub fn padded(v: &RefInt, bits: usize) -> Vec<u64> {
    v.to_padded_words(bits.div_ceil(64))
}
