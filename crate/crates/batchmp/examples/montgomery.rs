//! Batch Montgomery modular multiplication over eight different moduli.
//!
//! One context precomputes N' and R^2 mod N for all lanes; the classic
//! reduce-after-multiply, the word-interleaved CIOS route, and the
//! truncated reduction then produce bit-identical results, all congruent
//! to T * R^-1 mod N and below 2N.
//!
//! Run with: `cargo run --release --example montgomery`

use batchmp::montgomery::{Flavor, MontgomeryContext};
use batchmp::{sampling, schoolbook, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

fn main() {
    let bits = 1024;
    let mut rng = ChaCha20Rng::seed_from_u64(31);

    let moduli: Vec<RefInt> = (0..8)
        .map(|_| sampling::random_odd_modulus(&mut rng, bits))
        .collect();
    let mod_words: Vec<Vec<u64>> = moduli.iter().map(|n| sampling::padded(n, bits)).collect();
    let ctx = MontgomeryContext::<8>::new(
        &std::array::from_fn(|k| mod_words[k].as_slice()),
        bits,
        Flavor::Schoolbook,
        false,
    )
    .expect("valid moduli");
    let m = ctx.limbs();
    println!("context: 8 distinct {bits}-bit moduli, t52={m}, R = 2^{}", 52 * m);

    let a_vals: Vec<RefInt> = (0..8)
        .map(|k| sampling::random_below(&mut rng, &moduli[k]))
        .collect();
    let b_vals: Vec<RefInt> = (0..8)
        .map(|k| sampling::random_below(&mut rng, &moduli[k]))
        .collect();
    let aw: Vec<Vec<u64>> = a_vals.iter().map(|v| v.to_padded_words(52 * m / 64 + 1)).collect();
    let bw: Vec<Vec<u64>> = b_vals.iter().map(|v| v.to_padded_words(52 * m / 64 + 1)).collect();
    let a = SlicedBatch::<8>::expand(&std::array::from_fn(|k| aw[k].as_slice()), 52 * m)
        .expect("inputs fit");
    let b = SlicedBatch::<8>::expand(&std::array::from_fn(|k| bw[k].as_slice()), 52 * m)
        .expect("inputs fit");

    let t = schoolbook::mul(&a, &b).expect("equal shapes");
    let classic = ctx.reduce(&t).expect("shapes");
    let truncated = ctx.reduce_truncated(&t).expect("shapes");
    let cios = ctx.mul_cios(&a, &b).expect("shapes");

    assert_eq!(classic, truncated);
    assert_eq!(classic, cios);
    println!("classic, truncated and CIOS reductions: bit-identical in all 8 lanes");

    for k in 0..8 {
        let r_bits = 52 * m;
        let n_prime = refnum::neg_inverse_mod_pow2(&moduli[k], r_bits);
        let want = refnum::montred(&a_vals[k].mul(&b_vals[k]), &moduli[k], &n_prime, r_bits);
        assert_eq!(classic.lane_value(k), want);
    }
    println!("every lane equals the scalar reference reduction");

    // Round trip through the Montgomery domain.
    let am = ctx.to_mont(&a).expect("shapes");
    let back = ctx.from_mont(&am).expect("shapes");
    for k in 0..8 {
        assert_eq!(back.lane_value(k), a_vals[k]);
    }
    println!("from_mont(to_mont(x)) returned every lane to canonical form");
}
