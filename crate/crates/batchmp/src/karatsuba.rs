//! One- and two-stage batch Karatsuba multiplication and squaring, plus the
//! truncated high-half fused multiply-add used by the truncated Montgomery
//! reduction in its Karatsuba flavor.
//!
//! Operands split into two shares one bit short of the elementary-multiplier
//! width, so the share sums of the middle product still fit the elementary
//! grid. The 4154-bit size recurses once more ("double" splitting): nine
//! elementary schoolbook products of 1040 bits.

use crate::batch::{limbs_for_bits, SlicedBatch};
use crate::lane::{LaneVector, LIMB_BITS, LIMB_MASK};
use crate::{schoolbook, Error};

/// Split geometry for one supported Karatsuba operand size.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct KaratsubaPlan {
    total_bits: usize,
    half_bits: usize,
    stages: u8,
    elementary_bits: usize,
}

impl KaratsubaPlan {
    /// Plan for a supported operand size: 518, 1038, 2078 or 4154 bits.
    pub fn for_total_bits(total_bits: usize) -> Result<Self, Error> {
        let (stages, elementary_bits) = match total_bits {
            518 => (1, 260),
            1038 => (1, 520),
            2078 => (1, 1040),
            4154 => (2, 2078),
            _ => return Err(Error::UnsupportedSize { bits: total_bits }),
        };
        Ok(KaratsubaPlan {
            total_bits,
            half_bits: total_bits / 2,
            stages,
            elementary_bits,
        })
    }

    /// Plan sized to hold products of redundant-form values below `2N` for
    /// a modulus of `bits` bits.
    pub fn for_modulus_bits(bits: usize) -> Result<Self, Error> {
        match bits {
            1024 => Self::for_total_bits(1038),
            2048 => Self::for_total_bits(2078),
            4096 => Self::for_total_bits(4154),
            _ => Err(Error::UnsupportedSize { bits }),
        }
    }

    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    pub fn half_bits(&self) -> usize {
        self.half_bits
    }

    pub fn stages(&self) -> u8 {
        self.stages
    }

    pub fn elementary_bits(&self) -> usize {
        self.elementary_bits
    }

    /// Limb count of the operand grid.
    pub fn operand_limbs(&self) -> usize {
        limbs_for_bits(self.total_bits)
    }

    fn check_operand<const L: usize>(&self, x: &SlicedBatch<L>) -> Result<(), Error> {
        if x.n_limbs() != self.operand_limbs() {
            return Err(Error::ShapeMismatch {
                expected: self.operand_limbs(),
                got: x.n_limbs(),
            });
        }
        Ok(())
    }
}

/// Exact double-width product of values below `2^total_bits`.
pub fn mul<const L: usize>(
    a: &SlicedBatch<L>,
    b: &SlicedBatch<L>,
    plan: &KaratsubaPlan,
) -> Result<SlicedBatch<L>, Error> {
    plan.check_operand(a)?;
    plan.check_operand(b)?;
    Ok(mul_inner(a, Some(b), plan))
}

/// Exact double-width square.
pub fn square<const L: usize>(
    a: &SlicedBatch<L>,
    plan: &KaratsubaPlan,
) -> Result<SlicedBatch<L>, Error> {
    plan.check_operand(a)?;
    Ok(mul_inner(a, None, plan))
}

/// 4154-bit product through two recursion stages (nine 1040-bit
/// elementary schoolbook products).
pub fn mul_double<const L: usize>(
    a: &SlicedBatch<L>,
    b: &SlicedBatch<L>,
) -> Result<SlicedBatch<L>, Error> {
    let plan = KaratsubaPlan::for_total_bits(4154)?;
    mul(a, b, &plan)
}

// One Karatsuba stage; `b = None` means squaring. Elementary products are
// schoolbook at one stage, a nested Karatsuba stage for the 4154-bit plan.
fn mul_inner<const L: usize>(
    a: &SlicedBatch<L>,
    b: Option<&SlicedBatch<L>>,
    plan: &KaratsubaPlan,
) -> SlicedBatch<L> {
    let hb = plan.half_bits;
    let elem: Box<dyn Fn(&SlicedBatch<L>, Option<&SlicedBatch<L>>) -> SlicedBatch<L>> =
        if plan.stages == 1 {
            Box::new(|x, y| match y {
                Some(y) => schoolbook::mul(x, y).expect("elementary shapes"),
                None => schoolbook::square(x),
            })
        } else {
            let sub = KaratsubaPlan::for_total_bits(plan.elementary_bits)
                .expect("nested plan");
            Box::new(move |x, y| mul_inner(x, y, &sub))
        };

    let (a_lo, a_hi, a_sum) = split_shares(a, hb);
    let (d0, d1, d2) = match b {
        Some(b) => {
            let (b_lo, b_hi, b_sum) = split_shares(b, hb);
            (
                elem(&a_lo, Some(&b_lo)),
                elem(&a_sum, Some(&b_sum)),
                elem(&a_hi, Some(&b_hi)),
            )
        }
        None => (elem(&a_lo, None), elem(&a_sum, None), elem(&a_hi, None)),
    };

    // Middle coefficient a_lo*b_hi + a_hi*b_lo = D1 - D0 - D2 >= 0; subtract
    // the positives one at a time, each difference stays non-negative.
    let (m1, borrow1) = d1.sub_borrow(&d0);
    debug_assert!(borrow1.is_zero());
    let (mid, borrow2) = m1.sub_borrow(&d2);
    debug_assert!(borrow2.is_zero());

    let out_limbs = 2 * a.n_limbs();
    let mut out = SlicedBatch::zero(out_limbs);
    out.add_shifted_bits(&d0, 0);
    out.add_shifted_bits(&mid, hb);
    out.add_shifted_bits(&d2, 2 * hb);
    let carry = out.carry_pass();
    debug_assert!(carry.is_zero());
    out
}

// Extracts the two half-width shares and their sum on the elementary grid.
fn split_shares<const L: usize>(
    x: &SlicedBatch<L>,
    half_bits: usize,
) -> (SlicedBatch<L>, SlicedBatch<L>, SlicedBatch<L>) {
    let lo = x.extract_bits(0, half_bits);
    let hi = x.extract_bits(half_bits, half_bits + 1);
    debug_assert_eq!(lo.n_limbs(), hi.n_limbs());
    // share sum < 2^(half_bits+1), which the elementary grid holds exactly
    let (sum, carry) = lo.add_carry(&hi);
    debug_assert!(carry.is_zero());
    (lo, hi, sum)
}

/// Truncated high half of `t + q*n` for the Karatsuba flavor.
///
/// Same contract as [`schoolbook::trunc_fma_high`]: per lane
/// `(t + q*n) = 0 mod R` with `R = 2^(52*m)`, `m = q.n_limbs()`; returns
/// exactly `(t + q*n) / R` and the low-half carry flag.
///
/// The operands split at the half-grid boundary `P` (asymmetric for odd
/// `m`). The high share product `D2 = q1*n1` is computed in full; the low
/// product `D0` and the share-sum product `D1` contribute only their high
/// halves, each obtained by a truncated schoolbook sub-instance whose
/// exactness follows from the Montgomery exactness of the whole: low parts
/// are reconstructed modulo `P` from values already known, never computed
/// from partial products.
pub fn trunc_fma_high<const L: usize>(
    q: &SlicedBatch<L>,
    n: &SlicedBatch<L>,
    t: &SlicedBatch<L>,
) -> Result<(SlicedBatch<L>, LaneVector<L>), Error> {
    let m = q.n_limbs();
    if n.n_limbs() != m {
        return Err(Error::ShapeMismatch {
            expected: m,
            got: n.n_limbs(),
        });
    }
    if t.n_limbs() != 2 * m {
        return Err(Error::ShapeMismatch {
            expected: 2 * m,
            got: t.n_limbs(),
        });
    }
    if m < 4 {
        return Err(Error::UnsupportedSize { bits: m * 52 });
    }
    let c_add = schoolbook::low_half_carry(&t.slice(0..m));

    let e0 = m / 2; // low-share limbs; the split point P' = 2^(52*e0)
    let e1 = m - e0; // high-share limbs; for odd m, e1 = e0 + 1

    let t0 = t.slice(0..e0);
    let t1 = t.slice(e0..e0 + e1);
    let thi = t.slice(m..2 * m);
    let q0 = q.slice(0..e0);
    let q1 = q.slice(e0..m);
    let n0 = n.slice(0..e0);
    let n1 = n.slice(e0..m);

    // A0 = (t0 + q0*n0) / P': a truncated schoolbook sub-instance, exact
    // because (T + qN) mod P' = (t0 + q0*n0) mod P' = 0.
    let (a0, _) = schoolbook::trunc_fma_high(&q0, &n0, &t0.resized(2 * e0))?;

    // D2 = q1 * n1, both halves kept.
    let d2 = schoolbook::mul(&q1, &n1)?;
    let d2l = d2.slice(0..e1);
    let d2h = d2.slice(e1..2 * e1);

    // Share sums with a possible one-bit overflow each.
    let (s_q, eps_q) = q0.resized(e1).add_carry(&q1);
    let (s_n, eps_n) = n0.resized(e1).add_carry(&n1);

    // s*, sigma*: the carry structure of A0 + t1 (+ P'*D2[0] when the split
    // is asymmetric) relative to P = 2^(52*e1).
    let (sum1, c1) = a0.resized(e1).add_carry(&t1);
    let (s_star, sigma_star) = if e1 > e0 {
        let mut pd = SlicedBatch::zero(e1);
        pd.set_limb(e0, d2.limb(0));
        let (s2, c2) = sum1.add_carry(&pd);
        (s2, c1.add(c2))
    } else {
        (sum1, c1)
    };
    let flag_s = s_star.or_fold().nonzero_flag();

    // Low parts known modulo P without computing any low partial products:
    //   M' mod P  = (-s*) mod P        (chunk exactness of the middle)
    //   D0 mod P  = (a0_low*P' - t0) mod P
    //   D1' mod P = (D0 + M' + D2) mod P
    let m_lo = negate_mod_grid(&s_star);
    let d0_mod_p = if e1 > e0 {
        let mut a0p = SlicedBatch::zero(e1);
        a0p.set_limb(e0, a0.limb(0));
        let (r, _) = a0p.add_carry(&negate_mod_grid(&t0.resized(e1)));
        r
    } else {
        negate_mod_grid(&t0.resized(e1))
    };
    let (d1l_partial, _) = d0_mod_p.add_carry(&m_lo);
    let (d1l, _) = d1l_partial.add_carry(&d2l);
    let x1 = negate_mod_grid(&d1l);
    let flag_x1 = x1.or_fold().nonzero_flag();

    // D1'h via a second truncated sub-instance: (x1 + s_q*s_n) = 0 mod P.
    let (a1, _) = schoolbook::trunc_fma_high(&s_q, &s_n, &x1.resized(2 * e1))?;

    // Overflow corrections for the share sums:
    // corr = eps_q*s_n + eps_n*s_q + eps_q*eps_n*P.
    let zero = SlicedBatch::zero(e1);
    let eq_mask = eps_q.eq_mask(LaneVector::splat(1));
    let en_mask = eps_n.eq_mask(LaneVector::splat(1));
    let sel_n = select_batch(&eq_mask, &s_n, &zero);
    let sel_q = select_batch(&en_mask, &s_q, &zero);
    let (corr_lo, corr_carry) = sel_n.add_carry(&sel_q);
    let mut corr = corr_lo.resized(e1 + 1);
    let both = eq_mask.and(en_mask).select(LaneVector::splat(1), LaneVector::ZERO);
    corr.set_limb(e1, corr.limb(e1).add(corr_carry).add(both));

    // Carry bookkeeping of the two known low-sum comparisons.
    let (sa, sig_a) = d1l.add_carry(&t0.resized(e1));
    let (sb, sig_b) = {
        let (u, cb1) = d2l.add_carry(&m_lo);
        if e1 > e0 {
            let mut a0p = SlicedBatch::zero(e1);
            a0p.set_limb(e0, a0.limb(0));
            let (v, cb2) = u.add_carry(&a0p);
            (v, cb1.add(cb2))
        } else {
            (u, cb1)
        }
    };
    debug_assert_eq!(sa.lane_value(0), sb.lane_value(0));
    let _ = (sa, sb);

    // Assemble: thi + D2-part + D1'h + corr + small flags
    //           - (D2h + A0-part + sigma_b) ,
    // positives first, one full-width borrow-propagating subtraction after.
    let mut out = thi.resized(m + 1);
    if e1 > e0 {
        // odd split: the D2 term enters shifted down one limb
        out.add_shifted_bits(&d2.slice(1..2 * e1), 0);
    } else {
        out.add_shifted_bits(&d2, 0);
    }
    let d1h = a1; // A1' = D1'h + [x1 != 0]; the flag joins the subtrahend
    out.add_shifted_bits(&d1h, 0);
    out.add_shifted_bits(&corr, 0);
    let small = sigma_star.add(flag_s).add(sig_a);
    out.set_limb(0, out.limb(0).add(small));

    let mut sub_total = d2h.resized(m + 1);
    if e1 > e0 {
        // subtract alpha1 = A0 >> 52
        if e0 > 1 {
            sub_total.add_shifted_bits(&a0.slice(1..e0), 0);
        }
    } else {
        sub_total.add_shifted_bits(&a0, 0);
    }
    let (sub_total, c) = sub_total.add_carry(&{
        let mut s = SlicedBatch::zero(m + 1);
        s.set_limb(0, sig_b.add(flag_x1));
        s
    });
    debug_assert!(c.is_zero());

    out.sub_in_place_unnormalized(&sub_total, 0);
    let carry = out.carry_pass();
    debug_assert!(carry.is_zero());
    let hi = out.slice(0..m);
    debug_assert!(out.limb(m).is_zero());
    Ok((hi, c_add))
}

// (2^(52*n) - x) mod 2^(52*n): limb-wise complement plus one, carry dropped.
fn negate_mod_grid<const L: usize>(x: &SlicedBatch<L>) -> SlicedBatch<L> {
    let mask = LaneVector::splat(LIMB_MASK);
    let mut out = SlicedBatch::zero(x.n_limbs());
    let mut carry = LaneVector::splat(1);
    for i in 0..x.n_limbs() {
        let t = mask.sub(x.limb(i)).add(carry);
        carry = t.shr(LIMB_BITS);
        out.set_limb(i, t.and(mask));
    }
    out
}

fn select_batch<const L: usize>(
    mask: &LaneVector<L>,
    a: &SlicedBatch<L>,
    b: &SlicedBatch<L>,
) -> SlicedBatch<L> {
    let mut out = SlicedBatch::zero(a.n_limbs());
    for i in 0..a.n_limbs() {
        out.set_limb(i, mask.select(a.limb(i), b.limb(i)));
    }
    out
}
