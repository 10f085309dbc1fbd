//! Trace-level constant-time evidence for the exponentiation.
//!
//! Two exponent batches of the same bit length - one all zero bits, one all
//! ones - are run through the fixed-window pipeline while every lane
//! operation is counted and folded into a sequence digest. The schedules
//! must be indistinguishable. The intentionally leaky reference path (direct
//! table indexing, zero windows skipped) is run as a counterexample.
//!
//! Run with: `cargo run --release --example constant_time`

use batchmp::modexp::{exp_sliced, ExpConfig};
use batchmp::montgomery::{Flavor, MontgomeryContext};
use batchmp::{sampling, trace, ExponentBatch, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

fn main() {
    let bits = 1024;
    let s = 256; // shared exponent bit length
    let mut rng = ChaCha20Rng::seed_from_u64(59);

    let moduli: Vec<RefInt> = (0..8)
        .map(|_| sampling::random_odd_modulus(&mut rng, bits))
        .collect();
    let words: Vec<Vec<u64>> = moduli.iter().map(|n| sampling::padded(n, bits)).collect();
    let ctx = MontgomeryContext::<8>::new(
        &std::array::from_fn(|k| words[k].as_slice()),
        bits,
        Flavor::Schoolbook,
        true,
    )
    .expect("valid moduli");

    let bases: Vec<RefInt> = (0..8)
        .map(|k| sampling::random_below(&mut rng, &moduli[k]))
        .collect();
    let bw: Vec<Vec<u64>> = bases.iter().map(|b| sampling::padded(b, bits)).collect();
    let base = SlicedBatch::<8>::expand(
        &std::array::from_fn(|k| bw[k].as_slice()),
        52 * ctx.limbs(),
    )
    .expect("inputs fit");

    let zeros = vec![0u64; s / 64];
    let ones = vec![u64::MAX; s / 64];
    let e_zero =
        ExponentBatch::expand64(&std::array::from_fn(|_| zeros.as_slice()), s).expect("fits");
    let e_ones =
        ExponentBatch::expand64(&std::array::from_fn(|_| ones.as_slice()), s).expect("fits");
    let cfg = ExpConfig::new(4).expect("window in range");

    let measure = |e: &ExponentBatch<8>, leaky: bool| {
        trace::reset();
        let _ = exp_sliced(&base, e, &ctx, &cfg, leaky).expect("valid inputs");
        (trace::counters(), trace::digest())
    };

    let (c0, d0) = measure(&e_zero, false);
    let (c1, d1) = measure(&e_ones, false);
    println!("constant-time path, exponent = 0...0 : {c0}, digest {d0:016x}");
    println!("constant-time path, exponent = 1...1 : {c1}, digest {d1:016x}");
    assert_eq!((c0, d0), (c1, d1));
    println!("=> identical operation sequences; the trace reveals only the shared length\n");

    let (l0, ld0) = measure(&e_zero, true);
    let (l1, ld1) = measure(&e_ones, true);
    println!("leaky reference,   exponent = 0...0 : {l0}, digest {ld0:016x}");
    println!("leaky reference,   exponent = 1...1 : {l1}, digest {ld1:016x}");
    assert_ne!((l0, ld0), (l1, ld1));
    println!("=> the leaky path's trace depends on the exponent, as a working counterexample");
}
