//! Eight RSA-style modular exponentiations in one batch.
//!
//! Each lane gets its own modulus, base and exponent. The pipeline expands
//! the inputs, moves them into the Montgomery domain, walks the exponents
//! with a fixed-window schedule and constant-time table lookups, and
//! contracts canonical results. A 4-lane batch (the 256-bit register
//! layout) runs the same way.
//!
//! Run with: `cargo run --release --example modular_exponentiation`

use batchmp::modexp::{fixed_window_exp, ExpConfig};
use batchmp::montgomery::{Flavor, MontgomeryContext};
use batchmp::sampling;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

fn run_batch<const L: usize>(bits: usize, seed: u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let moduli: Vec<RefInt> = (0..L)
        .map(|_| sampling::random_odd_modulus(&mut rng, bits))
        .collect();
    let bases: Vec<RefInt> = (0..L)
        .map(|k| sampling::random_below(&mut rng, &moduli[k]))
        .collect();
    // RSA verification exponent in every lane
    let e = RefInt::from_u64(65537);

    let mod_words: Vec<Vec<u64>> = moduli.iter().map(|n| sampling::padded(n, bits)).collect();
    let ctx = MontgomeryContext::<L>::new(
        &std::array::from_fn(|k| mod_words[k].as_slice()),
        bits,
        Flavor::Schoolbook,
        true,
    )
    .expect("valid moduli");

    let base_words: Vec<Vec<u64>> = bases.iter().map(|b| sampling::padded(b, bits)).collect();
    let exp_words = e.to_padded_words(1);
    let cfg = ExpConfig::default_for_bits(bits);
    let out = fixed_window_exp(
        &std::array::from_fn(|k| base_words[k].as_slice()),
        &std::array::from_fn(|_| exp_words.as_slice()),
        e.bits(),
        &ctx,
        &cfg,
    )
    .expect("valid inputs");

    for k in 0..L {
        let want = refnum::modexp(&bases[k], &e, &moduli[k]);
        assert_eq!(RefInt::from_words(&out[k]), want);
    }
    println!(
        "batch of {L}: {bits}-bit moduli, e=65537, window {} -> all lanes match the oracle",
        cfg.window()
    );
}

fn main() {
    run_batch::<8>(1024, 101);
    run_batch::<8>(2048, 102);
    run_batch::<4>(1024, 103);
}
