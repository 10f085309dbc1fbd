//! Batch Karatsuba multiplication: three elementary products instead of
//! four, and a double split for the largest size.
//!
//! The 518/1038/2078-bit sizes run one splitting stage over schoolbook
//! elementary products; 4154-bit operands recurse once more, reaching nine
//! 1040-bit elementary products. Results are compared against schoolbook on
//! the same values.
//!
//! Run with: `cargo run --release --example karatsuba`

use batchmp::karatsuba::{self, KaratsubaPlan};
use batchmp::{schoolbook, trace, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    for bits in [518usize, 1038, 2078, 4154] {
        let plan = KaratsubaPlan::for_total_bits(bits).expect("supported size");
        let mk = |rng: &mut ChaCha20Rng| {
            let words: Vec<Vec<u64>> = (0..8)
                .map(|_| {
                    batchmp::sampling::random_bits(rng, bits).to_padded_words(bits.div_ceil(64))
                })
                .collect();
            SlicedBatch::<8>::expand(&std::array::from_fn(|k| words[k].as_slice()), bits)
                .expect("inputs fit")
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);

        trace::reset();
        let k = karatsuba::mul(&a, &b, &plan).expect("plan matches shapes");
        let k_madd = trace::counters().madd;
        let elems = trace::elementary_products();

        trace::reset();
        let s = schoolbook::mul(&a, &b).expect("equal shapes");
        let s_madd = trace::counters().madd;

        assert_eq!(k, s);
        println!(
            "{bits:>5} bits: {} stage(s), {elems} elementary {}-bit products, \
             {k_madd:>6} madd vs schoolbook {s_madd:>6} ({:.0}% saved), identical",
            plan.stages(),
            plan.elementary_bits(),
            100.0 * (1.0 - k_madd as f64 / s_madd as f64)
        );
    }
}
