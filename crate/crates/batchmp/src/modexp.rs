//! Constant-time batch fixed-window left-to-right modular exponentiation.
//!
//! The pipeline is expand -> to_mont -> table precomputation -> main loop
//! (`w` squarings, one constant-time table lookup, one multiplication per
//! window) -> from_mont -> contract. The exponent is walked on a fixed
//! window grid from the top, padded with zero windows, so the schedule
//! depends only on the shared exponent bit length and the window width;
//! zero windows multiply by the table's entry for 1 and are never skipped.

use crate::batch::{ExponentBatch, SlicedBatch};
use crate::lane::LaneVector;
use crate::montgomery::MontgomeryContext;
use crate::Error;

/// Window configuration for [`fixed_window_exp`].
#[derive(Clone, Copy, Debug)]
pub struct ExpConfig {
    window: u32,
}

impl ExpConfig {
    pub fn new(window: u32) -> Result<Self, Error> {
        if (1..=5).contains(&window) {
            Ok(ExpConfig { window })
        } else {
            Err(Error::WindowOutOfRange(window))
        }
    }

    /// Measured best widths: 4 for 1024-bit moduli, 5 for 2048 and 4096.
    pub fn default_for_bits(bits: usize) -> Self {
        ExpConfig {
            window: if bits <= 1024 { 4 } else { 5 },
        }
    }

    pub fn window(&self) -> u32 {
        self.window
    }
}

/// `w`-bit window of each lane's exponent starting at `bit_pos`,
/// handling 64-bit word straddles. Positions beyond the stored words read
/// as zero.
pub fn extract_window<const L: usize>(
    e: &ExponentBatch<L>,
    bit_pos: usize,
    w: u32,
) -> LaneVector<L> {
    let word = bit_pos / 64;
    let off = (bit_pos % 64) as u32;
    let mut v = e.word(word).shr(off);
    if off + w > 64 {
        v = v.or(e.word(word + 1).shl(64 - off));
    }
    v.and(LaneVector::splat((1u64 << w) - 1))
}

/// Constant-time batch table lookup: per lane `k`, entry `indices[k]`.
///
/// Scans all `2^w` entries with equality masks and selects, touching every
/// entry on every call; the operation sequence is independent of the
/// index values.
pub fn ct_table_select<const L: usize>(
    table: &[SlicedBatch<L>],
    indices: LaneVector<L>,
) -> SlicedBatch<L> {
    debug_assert!(indices
        .lanes()
        .iter()
        .all(|&i| (i as usize) < table.len()));
    let mut out = SlicedBatch::zero(table[0].n_limbs());
    for (i, entry) in table.iter().enumerate() {
        let hit = indices.eq_mask(LaneVector::splat(i as u64));
        for limb in 0..out.n_limbs() {
            out.set_limb(limb, hit.select(entry.limb(limb), out.limb(limb)));
        }
    }
    out
}

/// Batch modular exponentiation: per lane `k`, `base[k]^exponent[k] mod
/// modulus[k]`, canonical (`< N`). Bases must be below their moduli;
/// exponents share the bit length `exp_bits` (shorter ones zero-padded).
pub fn fixed_window_exp<const L: usize>(
    bases: &[&[u64]; L],
    exponents: &[&[u64]; L],
    exp_bits: usize,
    ctx: &MontgomeryContext<L>,
    cfg: &ExpConfig,
) -> Result<Vec<Vec<u64>>, Error> {
    let a = SlicedBatch::expand(bases, ctx.limbs() * 52)?;
    let e = ExponentBatch::expand64(exponents, exp_bits)?;
    let y = exp_sliced(&a, &e, ctx, cfg, false)?;
    Ok(y.contract())
}

/// Exponentiation core on already-sliced inputs. `leaky` selects the
/// non-constant-time reference path used as a negative control by the
/// verification harness: it indexes the table directly and skips the
/// multiplication on zero windows, so its operation trace depends on the
/// exponent values.
pub fn exp_sliced<const L: usize>(
    a: &SlicedBatch<L>,
    e: &ExponentBatch<L>,
    ctx: &MontgomeryContext<L>,
    cfg: &ExpConfig,
    leaky: bool,
) -> Result<SlicedBatch<L>, Error> {
    let w = cfg.window;
    let am = ctx.to_mont(a)?;

    // G[i] = a^i in the Montgomery domain, i < 2^w; G[0] is Montgomery one.
    let mut one = SlicedBatch::zero(ctx.limbs());
    one.set_limb(0, LaneVector::splat(1));
    let one_m = ctx.to_mont(&one)?;
    let mut table = Vec::with_capacity(1 << w);
    table.push(one_m.clone());
    if w >= 1 {
        table.push(am.clone());
        for _ in 2..(1usize << w) {
            let prev = table.last().unwrap();
            table.push(ctx.mul(prev, &am)?);
        }
    }

    // Fixed window grid: round the exponent length up to a multiple of w;
    // the top windows read zero bits and multiply by G[0].
    let padded = e.bit_length().div_ceil(w as usize) * w as usize;
    let mut y = one_m;
    let mut pos = padded;
    while pos != 0 {
        pos -= w as usize;
        for _ in 0..w {
            y = ctx.square(&y)?;
        }
        let idx = extract_window(e, pos, w);
        if leaky {
            // Negative control: data-dependent lookup and skip.
            let mut all_zero = true;
            for k in 0..L {
                if idx.lane(k) != 0 {
                    all_zero = false;
                }
            }
            if !all_zero {
                let tmp = SlicedBatch::from_limbs(
                    (0..ctx.limbs())
                        .map(|l| {
                            LaneVector::from_fn(|k| table[idx.lane(k) as usize].limb(l).lane(k))
                        })
                        .collect(),
                );
                y = ctx.mul(&y, &tmp)?;
            }
        } else {
            let tmp = ct_table_select(&table, idx);
            y = ctx.mul(&y, &tmp)?;
        }
    }
    ctx.from_mont(&y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montgomery::Flavor;
    use crate::sampling;
    use crate::trace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use refnum::RefInt;

    type B = SlicedBatch<8>;

    fn setup(
        rng: &mut ChaCha20Rng,
        bits: usize,
        flavor: Flavor,
        truncated: bool,
    ) -> ([RefInt; 8], MontgomeryContext<8>) {
        let ns: [RefInt; 8] =
            std::array::from_fn(|_| sampling::random_odd_modulus(rng, bits));
        let words: Vec<Vec<u64>> = ns.iter().map(|n| sampling::padded(n, bits)).collect();
        let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
        let ctx = MontgomeryContext::new(&refs, bits, flavor, truncated).unwrap();
        (ns, ctx)
    }

    #[test]
    fn window_extraction_cases() {
        let ones = [u64::MAX];
        let z = [0u64];
        let exps: [&[u64]; 8] = [&ones, &z, &z, &z, &z, &z, &z, &z];
        let e = ExponentBatch::expand64(&exps, 64).unwrap();
        assert_eq!(extract_window(&e, 60, 4).lane(0), 15);

        // straddle: words[0] = 2^63, words[1] = 1 -> bits 62..66 = 0110
        let s = [1u64 << 63, 1];
        let exps: [&[u64]; 8] = [&s, &z, &z, &z, &z, &z, &z, &z];
        let e = ExponentBatch::expand64(&exps, 128).unwrap();
        assert_eq!(extract_window(&e, 62, 4).lane(0), 0b0110);

        // reference bit-slicing oracle over random data, all positions
        let mut rng = ChaCha20Rng::seed_from_u64(30);
        let ev: [RefInt; 8] = std::array::from_fn(|_| sampling::random_bits(&mut rng, 192));
        let words: Vec<Vec<u64>> = ev.iter().map(|v| v.to_padded_words(3)).collect();
        let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
        let e = ExponentBatch::expand64(&refs, 192).unwrap();
        for w in 1..=5u32 {
            for pos in 0..(192 - w as usize) {
                let got = extract_window(&e, pos, w);
                for k in 0..8 {
                    let want = ev[k].shr_bits(pos).mod_pow2(w as usize);
                    assert_eq!(got.lane(k), want.words()[0]);
                }
            }
        }
    }

    #[test]
    fn table_select_matches_direct_indexing() {
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let table: Vec<B> = (0..16)
            .map(|_| {
                let vals: [RefInt; 8] =
                    std::array::from_fn(|_| sampling::random_bits(&mut rng, 260));
                let words: Vec<Vec<u64>> =
                    vals.iter().map(|v| v.to_padded_words(5)).collect();
                let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
                B::expand(&refs, 260).unwrap()
            })
            .collect();

        let zero_idx = LaneVector::ZERO;
        assert_eq!(ct_table_select(&table, zero_idx), table[0]);

        let idx = LaneVector::from_fn(|k| (k as u64 * 3 + 1) % 16);
        trace::reset();
        let got = ct_table_select(&table, idx);
        let trace_a = (trace::counters(), trace::digest());
        for k in 0..8 {
            assert_eq!(
                got.lane_value(k),
                table[idx.lane(k) as usize].lane_value(k)
            );
        }
        // operation count independent of the index values
        let idx2 = LaneVector::from_fn(|k| (15 - k as u64) % 16);
        trace::reset();
        let _ = ct_table_select(&table, idx2);
        assert_eq!(trace_a, (trace::counters(), trace::digest()));
    }

    #[test]
    fn exp_edge_exponents() {
        let mut rng = ChaCha20Rng::seed_from_u64(32);
        let (ns, ctx) = setup(&mut rng, 1024, Flavor::Schoolbook, true);
        let bases: [RefInt; 8] =
            std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
        let bw: Vec<Vec<u64>> = bases.iter().map(|b| sampling::padded(b, 1024)).collect();
        let brefs: [&[u64]; 8] = std::array::from_fn(|k| bw[k].as_slice());

        // e = 0 -> 1
        let zero = [0u64];
        let erefs: [&[u64]; 8] = [&zero; 8];
        let cfg = ExpConfig::new(4).unwrap();
        let out = fixed_window_exp(&brefs, &erefs, 1, &ctx, &cfg).unwrap();
        for w in &out {
            assert_eq!(RefInt::from_words(w), RefInt::one());
        }

        // e = 1 -> base
        let one = [1u64];
        let erefs: [&[u64]; 8] = [&one; 8];
        let out = fixed_window_exp(&brefs, &erefs, 1, &ctx, &cfg).unwrap();
        for (k, w) in out.iter().enumerate() {
            assert_eq!(RefInt::from_words(w), bases[k]);
        }
    }

    #[test]
    fn exp_matches_oracle_all_windows() {
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        let (ns, ctx) = setup(&mut rng, 1024, Flavor::Schoolbook, false);
        let bases: [RefInt; 8] =
            std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
        let s = 64usize;
        let exps: [RefInt; 8] = std::array::from_fn(|_| sampling::random_bits(&mut rng, s));
        let bw: Vec<Vec<u64>> = bases.iter().map(|b| sampling::padded(b, 1024)).collect();
        let brefs: [&[u64]; 8] = std::array::from_fn(|k| bw[k].as_slice());
        let ew: Vec<Vec<u64>> = exps.iter().map(|e| e.to_padded_words(1)).collect();
        let erefs: [&[u64]; 8] = std::array::from_fn(|k| ew[k].as_slice());

        let mut results = Vec::new();
        for w in 1..=5 {
            let cfg = ExpConfig::new(w).unwrap();
            let out = fixed_window_exp(&brefs, &erefs, s, &ctx, &cfg).unwrap();
            for (k, words) in out.iter().enumerate() {
                let want = refnum::modexp(&bases[k], &exps[k], &ns[k]);
                assert_eq!(RefInt::from_words(words), want, "w={w} lane={k}");
            }
            results.push(out);
        }
        // window-width independence
        assert!(results.windows(2).all(|p| p[0] == p[1]));
    }

    #[test]
    fn trace_is_exponent_independent() {
        let mut rng = ChaCha20Rng::seed_from_u64(34);
        let (ns, ctx) = setup(&mut rng, 1024, Flavor::Schoolbook, true);
        let m = ctx.limbs();
        let bases: [RefInt; 8] =
            std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
        let bw: Vec<Vec<u64>> = bases.iter().map(|b| sampling::padded(b, 1024)).collect();
        let brefs: [&[u64]; 8] = std::array::from_fn(|k| bw[k].as_slice());
        let a = B::expand(&brefs, m * 52).unwrap();

        let s = 128;
        let zeros = vec![0u64; 2];
        let mut top = vec![0u64; 2];
        top[1] = u64::MAX;
        let e_lo: [&[u64]; 8] = [&zeros; 8];
        let e_hi: [&[u64]; 8] = [&top; 8];
        let ea = ExponentBatch::expand64(&e_lo, s).unwrap();
        let eb = ExponentBatch::expand64(&e_hi, s).unwrap();
        let cfg = ExpConfig::new(4).unwrap();

        trace::reset();
        let _ = exp_sliced(&a, &ea, &ctx, &cfg, false).unwrap();
        let ta = (trace::counters(), trace::digest());
        trace::reset();
        let _ = exp_sliced(&a, &eb, &ctx, &cfg, false).unwrap();
        let tb = (trace::counters(), trace::digest());
        assert_eq!(ta, tb);

        // negative control: the leaky path diverges on the same inputs
        trace::reset();
        let _ = exp_sliced(&a, &ea, &ctx, &cfg, true).unwrap();
        let la = (trace::counters(), trace::digest());
        trace::reset();
        let _ = exp_sliced(&a, &eb, &ctx, &cfg, true).unwrap();
        let lb = (trace::counters(), trace::digest());
        assert_ne!(la, lb);
    }

    #[test]
    fn window_config_bounds() {
        assert!(ExpConfig::new(0).is_err());
        assert!(ExpConfig::new(6).is_err());
        assert_eq!(ExpConfig::default_for_bits(1024).window(), 4);
        assert_eq!(ExpConfig::default_for_bits(2048).window(), 5);
        assert_eq!(ExpConfig::default_for_bits(4096).window(), 5);
    }
}
