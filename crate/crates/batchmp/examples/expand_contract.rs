//! Conversions between conventional word arrays and the sliced form.
//!
//! `expand` transposes little-endian 64-bit word arrays into one lane
//! vector per 52-bit limb position; `contract` inverts it. Exponents use a
//! plain 64-bit transposition with no radix change. Oversized values are
//! rejected rather than truncated.
//!
//! Run with: `cargo run --release --example expand_contract`

use batchmp::{Error, ExponentBatch, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

fn main() {
    let bits = 1040;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let vals: Vec<RefInt> = (0..8)
        .map(|_| batchmp::sampling::random_bits(&mut rng, 1024))
        .collect();
    let words: Vec<Vec<u64>> = vals.iter().map(|v| v.to_padded_words(17)).collect();

    let batch = SlicedBatch::<8>::expand(&std::array::from_fn(|k| words[k].as_slice()), bits)
        .expect("1024-bit values fit a 1040-bit grid");
    println!(
        "expanded 8 x 1024-bit values into {} lane vectors of 52-bit limbs",
        batch.n_limbs()
    );

    let back = batch.contract();
    for k in 0..8 {
        assert_eq!(RefInt::from_words(&back[k]), vals[k]);
    }
    println!("contract(expand(v)) == v for every lane");

    // Limb i of lane k holds bits [52*i, 52*i+52) of value k.
    let limb3 = batch.limb(3);
    for k in 0..8 {
        let want = vals[k].shr_bits(3 * 52).mod_pow2(52);
        assert_eq!(limb3.lane(k), want.words()[0]);
    }
    println!("limb 3 of every lane equals bits 156..208 of its value");

    // Validation: a 1041-bit value cannot enter a 1040-bit grid.
    let too_big = RefInt::pow2(1040).to_padded_words(17);
    let mut oversized: Vec<&[u64]> = words.iter().map(|w| w.as_slice()).collect();
    oversized[5] = &too_big;
    let err = SlicedBatch::<8>::expand(&std::array::from_fn(|k| oversized[k]), bits).unwrap_err();
    assert!(matches!(err, Error::ValueTooLarge { lane: 5, .. }));
    println!("oversized lane rejected: {err}");

    // Exponent transposition keeps raw 64-bit words.
    let e = ExponentBatch::<8>::expand64(&std::array::from_fn(|k| words[k].as_slice()), 1024)
        .expect("fits");
    for k in 0..8 {
        assert_eq!(e.word(2).lane(k), words[k][2]);
    }
    println!("exponent batch word 2 equals word 2 of every input");
}
