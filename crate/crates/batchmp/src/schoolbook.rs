//! Batch schoolbook multiplication, squaring, fused multiply-add, and the
//! truncated high-half fused multiply-add behind the truncated Montgomery
//! reduction.
//!
//! All operations keep the outer index on the first operand's limb lines and
//! defer carry handling to a single trailing pass (multiplication) or a
//! per-column running carry (squaring), so the fused multiply-add counts
//! match the cost formulas exactly: `2*m^2` for an `m`-limb product,
//! `m*(m+1)` for a square.

use crate::batch::SlicedBatch;
use crate::lane::{LaneVector, LIMB_BITS, LIMB_MASK};
use crate::{trace, Error};

fn check_shape<const L: usize>(x: &SlicedBatch<L>, expected: usize) -> Result<(), Error> {
    if x.n_limbs() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            got: x.n_limbs(),
        });
    }
    Ok(())
}

/// Full product: both operands `m` limbs, result `2m` limbs, normalized.
///
/// Performs exactly `2*m^2` fused multiply-adds and `2m-2` each of
/// shift/add/mask for the carry pass.
pub fn mul<const L: usize>(
    a: &SlicedBatch<L>,
    b: &SlicedBatch<L>,
) -> Result<SlicedBatch<L>, Error> {
    let m = a.n_limbs();
    check_shape(b, m)?;
    debug_assert!(a.is_normalized() && b.is_normalized());
    trace::record_elementary();
    let mut c = SlicedBatch::zero(2 * m);
    for i in 0..m {
        let ai = a.limb(i);
        for j in 0..m {
            let bj = b.limb(j);
            c.set_limb(i + j, c.limb(i + j).madd52lo(ai, bj));
            c.set_limb(i + j + 1, c.limb(i + j + 1).madd52hi(ai, bj));
        }
    }
    mul_carry_pass(&mut c, m);
    Ok(c)
}

// Trailing carry pass of the multiplication: column 0 holds a single low
// product and cannot carry, so the sweep starts by clearing column 1.
fn mul_carry_pass<const L: usize>(c: &mut SlicedBatch<L>, m: usize) {
    let mask = LaneVector::splat(LIMB_MASK);
    for i in 2..=2 * m - 2 {
        let carry = c.limb(i - 1).shr(LIMB_BITS);
        c.set_limb(i, c.limb(i).add(carry));
        c.set_limb(i - 1, c.limb(i - 1).and(mask));
    }
    let carry = c.limb(2 * m - 2).shr(LIMB_BITS);
    c.set_limb(2 * m - 1, c.limb(2 * m - 1).add(carry));
    c.set_limb(2 * m - 2, c.limb(2 * m - 2).and(mask));
    debug_assert!(c.is_normalized());
}

/// Square: `m` limbs in, `2m` limbs out, normalized.
///
/// Off-diagonal partial products are accumulated once per column, doubled
/// with a single left shift, and the diagonal term and running carry are
/// folded in afterwards; `m*(m+1)` fused multiply-adds total.
pub fn square<const L: usize>(a: &SlicedBatch<L>) -> SlicedBatch<L> {
    let m = a.n_limbs();
    debug_assert!(a.is_normalized());
    trace::record_elementary();
    let mask = LaneVector::splat(LIMB_MASK);
    let mut c = SlicedBatch::zero(2 * m);
    let mut carry = LaneVector::ZERO;
    for l in 0..2 * m {
        let mut acc = LaneVector::ZERO;
        // i + j = l, j < i
        let i_lo = (l + 1).div_ceil(2).max(l.saturating_sub(m - 1));
        for i in i_lo..=l.min(m - 1) {
            let j = l - i;
            if j < i {
                acc = acc.madd52lo(a.limb(i), a.limb(j));
            }
        }
        // i + j = l - 1, j < i
        if l >= 1 {
            let lm = l - 1;
            let i_lo = (lm + 1).div_ceil(2).max(lm.saturating_sub(m - 1));
            for i in i_lo..=lm.min(m - 1) {
                let j = lm - i;
                if j < i {
                    acc = acc.madd52hi(a.limb(i), a.limb(j));
                }
            }
        }
        acc = acc.shl(1);
        let d = l / 2;
        if d < m {
            acc = if l % 2 == 0 {
                acc.madd52lo(a.limb(d), a.limb(d))
            } else {
                acc.madd52hi(a.limb(d), a.limb(d))
            };
        }
        acc = acc.add(carry);
        carry = acc.shr(LIMB_BITS);
        c.set_limb(l, acc.and(mask));
    }
    debug_assert!(carry.is_zero());
    c
}

/// Fused multiply-add `t + q*n`: `q`, `n` have `m` limbs, `t` has `2m`.
///
/// The addition rides along in the accumulators, so the fused multiply-add
/// count equals a plain multiplication's. The sum must fit in `2m` limbs
/// (guaranteed in Montgomery use, where `t + q*n < R^2/2`).
pub fn fma<const L: usize>(
    q: &SlicedBatch<L>,
    n: &SlicedBatch<L>,
    t: &SlicedBatch<L>,
) -> Result<SlicedBatch<L>, Error> {
    let m = q.n_limbs();
    check_shape(n, m)?;
    check_shape(t, 2 * m)?;
    debug_assert!(q.is_normalized() && n.is_normalized() && t.is_normalized());
    let mut c = t.clone();
    for i in 0..m {
        let qi = q.limb(i);
        for j in 0..m {
            let nj = n.limb(j);
            c.set_limb(i + j, c.limb(i + j).madd52lo(qi, nj));
            c.set_limb(i + j + 1, c.limb(i + j + 1).madd52hi(qi, nj));
        }
    }
    // Unlike a plain product, column 0 starts at t[0] and may carry.
    let top = c.carry_pass();
    debug_assert!(top.is_zero(), "t + q*n exceeded 2m limbs");
    Ok(c)
}

/// Low half of `a*b` modulo `2^(52*m)`: computes only the partial products
/// of column weight below `m`. Used for the Montgomery quotient digit.
pub(crate) fn mul_low<const L: usize>(a: &SlicedBatch<L>, b: &SlicedBatch<L>) -> SlicedBatch<L> {
    let m = a.n_limbs();
    debug_assert_eq!(b.n_limbs(), m);
    let mask = LaneVector::splat(LIMB_MASK);
    let mut c = SlicedBatch::zero(m);
    for i in 0..m {
        let ai = a.limb(i);
        for j in 0..m - i {
            let bj = b.limb(j);
            c.set_limb(i + j, c.limb(i + j).madd52lo(ai, bj));
            if i + j + 1 < m {
                c.set_limb(i + j + 1, c.limb(i + j + 1).madd52hi(ai, bj));
            }
        }
    }
    let mask_drop = mask; // top carry is discarded: arithmetic is mod 2^(52m)
    let mut carry = LaneVector::ZERO;
    for i in 0..m {
        let t = c.limb(i).add(carry);
        carry = t.shr(LIMB_BITS);
        c.set_limb(i, t.and(mask_drop));
    }
    c
}

/// Carry flag entering the kept half: 1 where any of the low limbs of `t`
/// is nonzero, else 0.
///
/// On Montgomery-exact inputs the discarded low half of `t + q*n` sums to
/// exactly 0 or `R`, so this OR-fold is precisely the carry the addition
/// would have produced.
pub fn low_half_carry<const L: usize>(t_low: &SlicedBatch<L>) -> LaneVector<L> {
    t_low.or_fold().nonzero_flag()
}

/// Truncated high half of `t + q*n`.
///
/// Requires `(t + q*n) = 0 mod 2^(52*m)` per lane (the caller's Montgomery
/// exactness contract; it is not checked here). Returns the exact high half
/// `(t + q*n) / 2^(52*m)` and the carry flag of [`low_half_carry`].
///
/// Only partial products of column weight at least `m-1` are formed: the
/// boundary column `m-1` is computed completely (low products at `i+j=m-1`,
/// high products at `i+j=m-2`, plus `t`'s limb), and exactness pins the
/// carry it passes upward: the column's low bits plus the incoming carry
/// sum to 0 or exactly 2^52, so the outgoing carry is its high bits plus
/// one when its low bits are nonzero. Everything below is skipped.
pub fn trunc_fma_high<const L: usize>(
    q: &SlicedBatch<L>,
    n: &SlicedBatch<L>,
    t: &SlicedBatch<L>,
) -> Result<(SlicedBatch<L>, LaneVector<L>), Error> {
    let m = q.n_limbs();
    check_shape(n, m)?;
    check_shape(t, 2 * m)?;
    debug_assert!(q.is_normalized() && n.is_normalized() && t.is_normalized());
    let mask = LaneVector::splat(LIMB_MASK);

    let c_add = low_half_carry(&t.slice(0..m));

    // Boundary column m-1.
    let mut u = t.limb(m - 1);
    for i in 0..m {
        u = u.madd52lo(q.limb(i), n.limb(m - 1 - i));
    }
    for i in 0..m - 1 {
        u = u.madd52hi(q.limb(i), n.limb(m - 2 - i));
    }
    let carry = u.shr(LIMB_BITS).add(u.and(mask).nonzero_flag());

    // Columns m .. 2m-1.
    let mut hi = SlicedBatch::zero(m);
    for w in m..2 * m {
        let mut acc = t.limb(w);
        for i in w + 1 - m..m {
            let j = w - i;
            acc = acc.madd52lo(q.limb(i), n.limb(j));
        }
        for i in w - m..m {
            let j = w - 1 - i;
            if j < m {
                acc = acc.madd52hi(q.limb(i), n.limb(j));
            }
        }
        hi.set_limb(w - m, acc);
    }
    hi.set_limb(0, hi.limb(0).add(carry));
    let top = hi.carry_pass();
    debug_assert!(top.is_zero(), "truncated high half exceeded m limbs");
    Ok((hi, c_add))
}

/// Fused multiply-add count of [`trunc_fma_high`] for `m` limbs.
pub fn trunc_fma_madd_count(m: u64) -> u64 {
    m * m + 2 * m - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use refnum::RefInt;

    type B = SlicedBatch<8>;

    fn random_ref(rng: &mut ChaCha20Rng, bits: usize) -> RefInt {
        let mut words = vec![0u64; bits.div_ceil(64)];
        rng.fill(&mut words[..]);
        let extra = 64 * words.len() - bits;
        if extra > 0 {
            let last = words.last_mut().unwrap();
            *last >>= extra;
        }
        RefInt::from_words(&words)
    }

    fn to_batch(vals: &[RefInt; 8], bits: usize) -> B {
        let words: Vec<Vec<u64>> = vals
            .iter()
            .map(|v| v.to_padded_words(bits.div_ceil(64)))
            .collect();
        let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
        B::expand(&refs, bits).unwrap()
    }

    #[test]
    fn mul_zero_and_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let b = to_batch(&std::array::from_fn(|_| random_ref(&mut rng, 260)), 260);
        let zero = B::zero(5);
        let p = mul(&zero, &b).unwrap();
        assert!((0..8).all(|k| p.lane_value(k).is_zero()));

        let one = to_batch(&std::array::from_fn(|_| RefInt::one()), 260);
        let p = mul(&one, &b).unwrap();
        for k in 0..8 {
            assert_eq!(p.lane_value(k), b.lane_value(k));
        }
    }

    #[test]
    fn mul_shape_error() {
        assert!(matches!(
            mul(&B::zero(5), &B::zero(6)),
            Err(Error::ShapeMismatch { expected: 5, got: 6 })
        ));
    }

    #[test]
    fn mul_and_square_match_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for bits in [260usize, 520, 1040] {
            for _ in 0..20 {
                let av: [RefInt; 8] = std::array::from_fn(|_| random_ref(&mut rng, bits));
                let bv: [RefInt; 8] = std::array::from_fn(|_| random_ref(&mut rng, bits));
                let a = to_batch(&av, bits);
                let b = to_batch(&bv, bits);
                let p = mul(&a, &b).unwrap();
                let s = square(&a);
                let s2 = mul(&a, &a).unwrap();
                for k in 0..8 {
                    assert_eq!(p.lane_value(k), av[k].mul(&bv[k]));
                    assert_eq!(s.lane_value(k), av[k].square());
                }
                assert_eq!(s, s2);
            }
        }
    }

    #[test]
    fn madd_counts_match_cost_table() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = to_batch(&std::array::from_fn(|_| random_ref(&mut rng, 1040)), 1040);
        let b = to_batch(&std::array::from_fn(|_| random_ref(&mut rng, 1040)), 1040);

        trace::reset();
        let _ = mul(&a, &b).unwrap();
        let c = trace::counters();
        assert_eq!(c.madd, 800); // 2 * 20^2
        assert!(c.shift <= 40 && c.add_sub <= 40 && c.mask <= 40);
        assert_eq!(c.shift, 38); // 2*20 - 2
        assert_eq!(c.add_sub, 38);
        assert_eq!(c.mask, 38);

        trace::reset();
        let _ = square(&a);
        assert_eq!(trace::counters().madd, 420); // 20 * 21
    }

    #[test]
    fn fma_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let m = 10;
        let bits = 520;
        let qv: [RefInt; 8] = std::array::from_fn(|_| random_ref(&mut rng, bits));
        let nv: [RefInt; 8] = std::array::from_fn(|_| random_ref(&mut rng, bits - 1));
        let tv: [RefInt; 8] = std::array::from_fn(|_| random_ref(&mut rng, 2 * bits - 1));
        let q = to_batch(&qv, bits);
        let n = to_batch(&nv, bits);
        let t = {
            let words: Vec<Vec<u64>> = tv.iter().map(|v| v.to_padded_words(17)).collect();
            let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
            B::expand(&refs, 52 * 2 * m).unwrap()
        };

        // q = 0 leaves t unchanged
        let r = fma(&B::zero(m), &n, &t).unwrap();
        assert_eq!(r, t);
        // t = 0 degenerates to mul
        let r = fma(&q, &n, &B::zero(2 * m)).unwrap();
        assert_eq!(r, mul(&q, &n).unwrap());
        // random: equals oracle t + q*n (madd count same as mul)
        trace::reset();
        let r = fma(&q, &n, &t).unwrap();
        assert_eq!(trace::counters().madd, 2 * (m as u64) * (m as u64));
        for k in 0..8 {
            assert_eq!(r.lane_value(k), tv[k].add(&qv[k].mul(&nv[k])));
        }
    }

    #[test]
    fn low_half_carry_flags() {
        let z = B::zero(5);
        assert_eq!(low_half_carry(&z), LaneVector::ZERO);
        let mut one_bit = B::zero(5);
        one_bit.set_limb(3, LaneVector::from_fn(|k| if k == 2 { 1 << 17 } else { 0 }));
        let f = low_half_carry(&one_bit);
        assert_eq!(f, LaneVector::from_fn(|k| (k == 2) as u64));
    }

    /// Builds a Montgomery-exact instance (T, q, N) per lane via the oracle.
    fn mont_instance(
        rng: &mut ChaCha20Rng,
        m: usize,
        nbits: usize,
    ) -> ([RefInt; 8], [RefInt; 8], [RefInt; 8]) {
        let r_bits = 52 * m;
        let mut tv: Vec<RefInt> = Vec::new();
        let mut qv: Vec<RefInt> = Vec::new();
        let mut nv: Vec<RefInt> = Vec::new();
        for _ in 0..8 {
            let mut n = random_ref(rng, nbits);
            if !n.is_odd() {
                n = n.add(&RefInt::one());
            }
            if n.bits() < 2 {
                n = RefInt::from_u64(3);
            }
            let np = refnum::neg_inverse_mod_pow2(&n, r_bits);
            let two_n = n.add(&n);
            let a = random_ref(rng, two_n.bits()).rem(&two_n);
            let b = random_ref(rng, two_n.bits()).rem(&two_n);
            let t = a.mul(&b);
            let q = t.mod_pow2(r_bits).mul(&np).mod_pow2(r_bits);
            tv.push(t);
            qv.push(q);
            nv.push(n);
        }
        (
            tv.try_into().unwrap(),
            qv.try_into().unwrap(),
            nv.try_into().unwrap(),
        )
    }

    #[test]
    fn trunc_matches_full_fma_high_half() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for (m, nbits) in [(5usize, 258usize), (10, 518), (20, 1024)] {
            for _ in 0..40 {
                let (tv, qv, nv) = mont_instance(&mut rng, m, nbits);
                let t = {
                    let words: Vec<Vec<u64>> =
                        tv.iter().map(|v| v.to_padded_words((52 * 2 * m).div_ceil(64))).collect();
                    let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
                    B::expand(&refs, 52 * 2 * m).unwrap()
                };
                let q = to_batch(&qv, 52 * m);
                let n = to_batch(&nv, 52 * m);
                let full = fma(&q, &n, &t).unwrap();
                let (hi, c_add) = trunc_fma_high(&q, &n, &t).unwrap();
                for k in 0..8 {
                    assert_eq!(hi.lane_value(k), full.slice(m..2 * m).lane_value(k));
                    let want_c = !tv[k].mod_pow2(52 * m).is_zero() as u64;
                    assert_eq!(c_add.lane(k), want_c);
                }
            }
        }
    }

    #[test]
    fn trunc_zero_case_and_count() {
        let m = 20;
        let (hi, c_add) = trunc_fma_high(&B::zero(m), &B::zero(m), &B::zero(2 * m)).unwrap();
        assert!((0..8).all(|k| hi.lane_value(k).is_zero()));
        assert!(c_add.is_zero());

        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (tv, qv, nv) = mont_instance(&mut rng, m, 1024);
        let t = {
            let words: Vec<Vec<u64>> =
                tv.iter().map(|v| v.to_padded_words(33)).collect();
            let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
            B::expand(&refs, 2080).unwrap()
        };
        let q = to_batch(&qv, 1040);
        let n = to_batch(&nv, 1040);
        trace::reset();
        let _ = trunc_fma_high(&q, &n, &t).unwrap();
        let madd = trace::counters().madd;
        assert_eq!(madd, trunc_fma_madd_count(20)); // 439
        // within the +-m audit tolerance of the m^2 + floor(3m/2) - 1 formula
        let formula = 20 * 20 + 30 - 1;
        assert!(madd.abs_diff(formula) <= 20);
        // strictly cheaper than the 0.55 * full-fma bound
        assert!((madd as f64) < 0.55 * 800.0);
    }
}
