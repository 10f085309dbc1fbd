//! Eight big-integer multiplications at once.
//!
//! Values enter as little-endian 64-bit word arrays, are expanded into the
//! lane-sliced radix-2^52 form, multiplied in one batch pass, and contracted
//! back. Every lane is checked against the reference arithmetic.
//!
//! Run with: `cargo run --release --example batch_multiplication`

use batchmp::{schoolbook, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

fn main() {
    let bits = 1040;
    let mut rng = ChaCha20Rng::seed_from_u64(7);

    let a_vals: Vec<RefInt> = (0..8)
        .map(|_| batchmp::sampling::random_bits(&mut rng, bits))
        .collect();
    let b_vals: Vec<RefInt> = (0..8)
        .map(|_| batchmp::sampling::random_bits(&mut rng, bits))
        .collect();

    let a_words: Vec<Vec<u64>> = a_vals.iter().map(|v| v.to_padded_words(17)).collect();
    let b_words: Vec<Vec<u64>> = b_vals.iter().map(|v| v.to_padded_words(17)).collect();
    let a = SlicedBatch::<8>::expand(&std::array::from_fn(|k| a_words[k].as_slice()), bits)
        .expect("inputs fit");
    let b = SlicedBatch::<8>::expand(&std::array::from_fn(|k| b_words[k].as_slice()), bits)
        .expect("inputs fit");

    let product = schoolbook::mul(&a, &b).expect("equal shapes");
    let out = product.contract();

    println!("batch of 8 multiplications, {bits}-bit operands ({} limbs each):", a.n_limbs());
    for k in 0..8 {
        let got = RefInt::from_words(&out[k]);
        let want = a_vals[k].mul(&b_vals[k]);
        assert_eq!(got, want);
        println!("  lane {k}: {} bits x {} bits -> {} bits  (matches reference)",
            a_vals[k].bits(), b_vals[k].bits(), got.bits());
    }
    println!("all lanes verified against refnum");
}
