//! The truncated Montgomery reduction and what it saves.
//!
//! Because T + qN is divisible by R, the entire low half of q*N never needs
//! to be computed: one complete boundary column pins the carry, and the OR
//! of T's low limbs tells whether the discarded half summed to 0 or to R.
//! The counters show the fused multiply-add count of the reduction step
//! falling by nearly half; the results stay bit-identical, including on
//! instances engineered to hit both carry-flag branches.
//!
//! Run with: `cargo run --release --example truncated_reduction`

use batchmp::montgomery::{Flavor, MontgomeryContext};
use batchmp::{sampling, schoolbook, trace, SlicedBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(47);
    for bits in [1024usize, 2048, 4096] {
        let moduli: Vec<RefInt> = (0..8)
            .map(|_| sampling::random_odd_modulus(&mut rng, bits))
            .collect();
        let words: Vec<Vec<u64>> = moduli.iter().map(|n| sampling::padded(n, bits)).collect();
        let ctx = MontgomeryContext::<8>::new(
            &std::array::from_fn(|k| words[k].as_slice()),
            bits,
            Flavor::Schoolbook,
            false,
        )
        .expect("valid moduli");
        let m = ctx.limbs();

        let mk = |rng: &mut ChaCha20Rng| {
            let v: Vec<RefInt> = (0..8)
                .map(|k| sampling::random_below(rng, &moduli[k]))
                .collect();
            let w: Vec<Vec<u64>> = v.iter().map(|x| x.to_padded_words((52 * m).div_ceil(64))).collect();
            SlicedBatch::<8>::expand(&std::array::from_fn(|k| w[k].as_slice()), 52 * m)
                .expect("inputs fit")
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let t = schoolbook::mul(&a, &b).expect("equal shapes");

        trace::reset();
        let classic = ctx.reduce(&t).expect("shapes");
        let classic_madd = trace::counters().madd;
        trace::reset();
        let truncated = ctx.reduce_truncated(&t).expect("shapes");
        let trunc_madd = trace::counters().madd;
        assert_eq!(classic, truncated);

        // c_add = 1 branch: any product with a nonzero low half (above).
        // c_add = 0 branch: T a multiple of R, low half all zero.
        let c1 = schoolbook::low_half_carry(&t.slice(0..m));
        let mut t0 = SlicedBatch::<8>::zero(2 * m);
        for i in 0..m {
            t0.set_limb(m + i, a.limb(i));
        }
        let c0 = schoolbook::low_half_carry(&t0.slice(0..m));
        assert_eq!(
            ctx.reduce(&t0).expect("shapes"),
            ctx.reduce_truncated(&t0).expect("shapes")
        );
        println!(
            "{bits:>4}-bit moduli (t52={m:>2}): reduction madd {classic_madd:>6} -> {trunc_madd:>6} \
             ({:.1}% saved); carry flags exercised: c_add={} and c_add={}",
            100.0 * (1.0 - trunc_madd as f64 / classic_madd as f64),
            c1.lane(0),
            c0.lane(0),
        );
    }
}
