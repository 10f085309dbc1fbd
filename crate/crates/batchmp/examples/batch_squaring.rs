//! Batch squaring and why it is cheaper than multiplication.
//!
//! Squaring forms each off-diagonal product once and doubles it with a
//! shift, so its fused multiply-add count is t52*(t52+1) against the
//! multiplication's 2*t52^2 - the counters show the near-halving.
//!
//! Run with: `cargo run --release --example batch_squaring`

use batchmp::{schoolbook, trace, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for bits in [260usize, 520, 1040, 2080, 4108] {
        let words: Vec<Vec<u64>> = (0..8)
            .map(|_| {
                batchmp::sampling::random_bits(&mut rng, bits).to_padded_words(bits.div_ceil(64))
            })
            .collect();
        let a = SlicedBatch::<8>::expand(&std::array::from_fn(|k| words[k].as_slice()), bits)
            .expect("inputs fit");

        trace::reset();
        let sq = schoolbook::square(&a);
        let sq_madd = trace::counters().madd;

        trace::reset();
        let mul = schoolbook::mul(&a, &a).expect("equal shapes");
        let mul_madd = trace::counters().madd;

        assert_eq!(sq, mul);
        let t52 = a.n_limbs() as u64;
        println!(
            "{bits:>5} bits (t52={t52:>2}): square {sq_madd:>6} madd vs mul {mul_madd:>6} madd  \
             (formulas {} and {}), identical results",
            t52 * (t52 + 1),
            2 * t52 * t52
        );
    }
}
