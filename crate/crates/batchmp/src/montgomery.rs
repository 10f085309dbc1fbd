//! Batch Montgomery modular arithmetic over per-lane moduli.
//!
//! A [`MontgomeryContext`] fixes `L` odd moduli of a common bit size
//! (1024, 2048 or 4096), housed in `t52 = ceil(bits/52)` limbs with
//! `R = 2^(52*t52)`. Since `R >= 4N`, chains of modular operations stay in
//! the redundant range `[0, 2N)` with no per-operation final subtraction;
//! values are canonicalized only when leaving the Montgomery domain.
//!
//! Three reduction routes produce bit-identical results: the classic
//! reduce-after-multiply, a word-interleaved CIOS multiplication, and the
//! truncated reduction that skips the discarded low half of `q*N`.

use crate::batch::{limbs_for_bits, SlicedBatch};
use crate::karatsuba::{self, KaratsubaPlan};
use crate::lane::{LaneVector, LIMB_BITS, LIMB_MASK};
use crate::{schoolbook, Error};

/// Which multiplication family a context uses for products and squares.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Flavor {
    Schoolbook,
    Karatsuba,
}

/// Modulus bit sizes with precomputed Montgomery parameters.
pub const MODULUS_BITS: [usize; 3] = [1024, 2048, 4096];

/// Per-batch moduli and reduction constants.
///
/// Immutable after construction; safe to share across threads.
pub struct MontgomeryContext<const L: usize> {
    moduli: SlicedBatch<L>,
    n_prime: SlicedBatch<L>,
    n0_prime: LaneVector<L>,
    r2: SlicedBatch<L>,
    t52: usize,
    modulus_bits: usize,
    flavor: Flavor,
    truncated: bool,
    plan: Option<KaratsubaPlan>,
}

impl<const L: usize> MontgomeryContext<L> {
    /// Builds a context for `L` odd moduli of `bits` bits each.
    ///
    /// `n_prime = (-N)^-1 mod R` comes from Newton lifting with limb
    /// doubling; `r2 = R^2 mod N` from `104 * t52` modular doublings of 1.
    pub fn new(
        moduli: &[&[u64]; L],
        bits: usize,
        flavor: Flavor,
        truncated: bool,
    ) -> Result<Self, Error> {
        if !MODULUS_BITS.contains(&bits) {
            return Err(Error::UnsupportedSize { bits });
        }
        if flavor == Flavor::Karatsuba && truncated && bits == 1024 {
            return Err(Error::UnsupportedConfiguration(
                "truncated Karatsuba reduction is not provided for 1024-bit moduli".into(),
            ));
        }
        let t52 = limbs_for_bits(bits);
        let m = SlicedBatch::<L>::expand(moduli, t52 * LIMB_BITS as usize).map_err(|e| {
            match e {
                Error::ValueTooLarge { lane, .. } => Error::ModulusOutOfRange { lane },
                other => other,
            }
        })?;
        for (k, words) in moduli.iter().enumerate() {
            if words.first().copied().unwrap_or(0) & 1 == 0 {
                return Err(Error::EvenModulus { lane: k });
            }
            let v = refnum::RefInt::from_words(words);
            if v.bits() > bits || v.cmp_ref(&refnum::RefInt::one()) != std::cmp::Ordering::Greater
            {
                return Err(Error::ModulusOutOfRange { lane: k });
            }
        }
        let n0_prime = neg_inv_limb(m.limb(0));
        let n_prime = lift_n_prime(&m, n0_prime, t52);
        let r2 = r2_by_doubling(&m, t52);
        let plan = match flavor {
            Flavor::Schoolbook => None,
            Flavor::Karatsuba => Some(KaratsubaPlan::for_modulus_bits(bits)?),
        };
        Ok(MontgomeryContext {
            moduli: m,
            n_prime,
            n0_prime,
            r2,
            t52,
            modulus_bits: bits,
            flavor,
            truncated,
            plan,
        })
    }

    pub fn limbs(&self) -> usize {
        self.t52
    }

    pub fn modulus_bits(&self) -> usize {
        self.modulus_bits
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn moduli(&self) -> &SlicedBatch<L> {
        &self.moduli
    }

    /// `(-N)^-1 mod R`, one lane per modulus.
    pub fn n_prime(&self) -> &SlicedBatch<L> {
        &self.n_prime
    }

    /// `R^2 mod N` per lane.
    pub fn r_squared(&self) -> &SlicedBatch<L> {
        &self.r2
    }

    fn check_half(&self, x: &SlicedBatch<L>) -> Result<(), Error> {
        if x.n_limbs() != self.t52 {
            return Err(Error::ShapeMismatch {
                expected: self.t52,
                got: x.n_limbs(),
            });
        }
        Ok(())
    }

    fn check_full(&self, x: &SlicedBatch<L>) -> Result<(), Error> {
        if x.n_limbs() != 2 * self.t52 {
            return Err(Error::ShapeMismatch {
                expected: 2 * self.t52,
                got: x.n_limbs(),
            });
        }
        Ok(())
    }

    /// Classic batch Montgomery reduction: `C = (T + qN) / R` with
    /// `q = T N' mod R`; `C = T R^-1 (mod N)` and `C < 2N` for `T < 4N^2`.
    pub fn reduce(&self, t: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        Ok(self.reduce_with_quotient(t)?.0)
    }

    /// [`reduce`] exposing the internal quotient `q`, so tests can verify
    /// the divisibility witness `T + qN = 0 (mod R)`.
    pub fn reduce_with_quotient(
        &self,
        t: &SlicedBatch<L>,
    ) -> Result<(SlicedBatch<L>, SlicedBatch<L>), Error> {
        self.check_full(t)?;
        let m = self.t52;
        let q = schoolbook::mul_low(&t.slice(0..m), &self.n_prime);
        let sum = schoolbook::fma(&q, &self.moduli, t)?;
        debug_assert!((0..m).all(|i| sum.limb(i).is_zero()), "low half not exact");
        Ok((sum.slice(m..2 * m), q))
    }

    /// Truncated Montgomery reduction: identical output to [`reduce`],
    /// computed from the high-weight partial products of `q*N` only.
    pub fn reduce_truncated(&self, t: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        self.check_full(t)?;
        let m = self.t52;
        let q = schoolbook::mul_low(&t.slice(0..m), &self.n_prime);
        let (hi, _c_add) = match self.flavor {
            Flavor::Schoolbook => schoolbook::trunc_fma_high(&q, &self.moduli, t)?,
            Flavor::Karatsuba => {
                if self.modulus_bits == 1024 {
                    return Err(Error::UnsupportedConfiguration(
                        "truncated Karatsuba reduction is not provided for 1024-bit moduli"
                            .into(),
                    ));
                }
                karatsuba::trunc_fma_high(&q, &self.moduli, t)?
            }
        };
        Ok(hi)
    }

    /// Word-interleaved Montgomery multiplication (CIOS).
    ///
    /// Schoolbook-only by construction; a Karatsuba context answers through
    /// its product-then-reduce route instead, with the same result.
    pub fn mul_cios(&self, a: &SlicedBatch<L>, b: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        self.check_half(a)?;
        self.check_half(b)?;
        if self.flavor == Flavor::Karatsuba {
            let t = self.product(a, b)?;
            return self.reduce(&t);
        }
        debug_assert!(a.is_normalized() && b.is_normalized());
        let m = self.t52;
        let mut y: Vec<LaneVector<L>> = vec![LaneVector::ZERO; m + 1];
        for i in 0..m {
            let ai = a.limb(i);
            for j in 0..m {
                let bj = b.limb(j);
                y[j] = y[j].madd52lo(ai, bj);
                y[j + 1] = y[j + 1].madd52hi(ai, bj);
            }
            let qi = LaneVector::ZERO.madd52lo(y[0], self.n0_prime);
            for j in 0..m {
                let nj = self.moduli.limb(j);
                y[j] = y[j].madd52lo(qi, nj);
                y[j + 1] = y[j + 1].madd52hi(qi, nj);
            }
            // exact shift down by one limb: y[0]'s low 52 bits are zero now
            let carry = y[0].shr(LIMB_BITS);
            y.rotate_left(1);
            y[m] = LaneVector::ZERO;
            y[0] = y[0].add(carry);
        }
        let mut out = SlicedBatch::from_limbs(y);
        let top = out.carry_pass();
        debug_assert!(top.is_zero() && out.limb(m).is_zero());
        Ok(out.slice(0..m))
    }

    /// Into the Montgomery domain: `a * R mod N`, redundant (< 2N).
    pub fn to_mont(&self, a: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        self.mul(a, &self.r2)
    }

    /// Out of the Montgomery domain, canonicalized to `< N`.
    pub fn from_mont(&self, a: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        self.check_half(a)?;
        let wide = a.resized(2 * self.t52);
        let red = if self.truncated {
            self.reduce_truncated(&wide)?
        } else {
            self.reduce(&wide)?
        };
        red.cond_sub_modulus(&self.moduli)
    }

    /// Full modular multiplication in the flavor and reduction of the
    /// context: inputs and output in `[0, 2N)`.
    pub fn mul(&self, a: &SlicedBatch<L>, b: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        let t = self.product(a, b)?;
        if self.truncated {
            self.reduce_truncated(&t)
        } else {
            self.reduce(&t)
        }
    }

    /// Modular squaring; same contract as [`mul`].
    pub fn square(&self, a: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        let t = self.square_product(a)?;
        if self.truncated {
            self.reduce_truncated(&t)
        } else {
            self.reduce(&t)
        }
    }

    fn product(&self, a: &SlicedBatch<L>, b: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        self.check_half(a)?;
        self.check_half(b)?;
        match self.flavor {
            Flavor::Schoolbook => schoolbook::mul(a, b),
            Flavor::Karatsuba => {
                let plan = self.plan.as_ref().expect("karatsuba context has a plan");
                let g = plan.operand_limbs();
                let p = karatsuba::mul(&a.resized(g), &b.resized(g), plan)?;
                Ok(p.resized(2 * self.t52))
            }
        }
    }

    fn square_product(&self, a: &SlicedBatch<L>) -> Result<SlicedBatch<L>, Error> {
        self.check_half(a)?;
        match self.flavor {
            Flavor::Schoolbook => Ok(schoolbook::square(a)),
            Flavor::Karatsuba => {
                let plan = self.plan.as_ref().expect("karatsuba context has a plan");
                let g = plan.operand_limbs();
                let p = karatsuba::square(&a.resized(g), plan)?;
                Ok(p.resized(2 * self.t52))
            }
        }
    }
}

// (-n0)^-1 mod 2^52 per lane: Newton iteration x <- x*(2 + n0*x), which
// squares the residual n0*x + 1 each round; 6 rounds cover 52 bits.
fn neg_inv_limb<const L: usize>(n0: LaneVector<L>) -> LaneVector<L> {
    let mask = LaneVector::splat(LIMB_MASK);
    let two = LaneVector::splat(2);
    let mut x = LaneVector::splat(1);
    for _ in 0..6 {
        let nx = LaneVector::ZERO.madd52lo(n0, x);
        let t = nx.add(two).and(mask);
        x = LaneVector::ZERO.madd52lo(x, t);
    }
    x
}

// Full-width N' = (-N)^-1 mod R by precision doubling over the limb grid:
// x <- x * (2 + N*x) mod 2^(52*w), w = 1, 2, 4, ... t52.
fn lift_n_prime<const L: usize>(
    n: &SlicedBatch<L>,
    n0_prime: LaneVector<L>,
    t52: usize,
) -> SlicedBatch<L> {
    let mut x = SlicedBatch::zero(1);
    x.set_limb(0, n0_prime);
    let mut w = 1;
    while w < t52 {
        let w2 = (2 * w).min(t52);
        let n_low = n.slice(0..w2);
        let x_pad = x.resized(w2);
        let mut nx = schoolbook::mul_low(&n_low, &x_pad);
        add_small_mod_grid(&mut nx, LaneVector::splat(2));
        x = schoolbook::mul_low(&x_pad, &nx);
        w = w2;
    }
    x
}

// batch += small, modulo the limb grid (carry out of the top is dropped).
fn add_small_mod_grid<const L: usize>(b: &mut SlicedBatch<L>, v: LaneVector<L>) {
    let mask = LaneVector::splat(LIMB_MASK);
    let mut carry = v;
    for i in 0..b.n_limbs() {
        let t = b.limb(i).add(carry);
        carry = t.shr(LIMB_BITS);
        b.set_limb(i, t.and(mask));
    }
}

// R^2 mod N by 104*t52 doublings of 1, each followed by a conditional
// subtract; linear, branch-free, and built only from library primitives.
fn r2_by_doubling<const L: usize>(n: &SlicedBatch<L>, t52: usize) -> SlicedBatch<L> {
    let mut r = SlicedBatch::zero(t52);
    r.set_limb(0, LaneVector::splat(1));
    for _ in 0..2 * LIMB_BITS as usize * t52 {
        let (doubled, carry) = r.add_carry(&r);
        debug_assert!(carry.is_zero());
        r = doubled
            .cond_sub_modulus(n)
            .expect("shapes match by construction");
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use refnum::RefInt;

    type Ctx = MontgomeryContext<8>;
    type B = SlicedBatch<8>;

    fn random_moduli(rng: &mut ChaCha20Rng, bits: usize) -> [RefInt; 8] {
        std::array::from_fn(|_| sampling::random_odd_modulus(rng, bits))
    }

    fn ctx_for(
        moduli: &[RefInt; 8],
        bits: usize,
        flavor: Flavor,
        truncated: bool,
    ) -> Ctx {
        let words: Vec<Vec<u64>> = moduli.iter().map(|n| sampling::padded(n, bits)).collect();
        let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
        Ctx::new(&refs, bits, flavor, truncated).unwrap()
    }

    fn to_batch(vals: &[RefInt; 8], limbs: usize) -> B {
        let words: Vec<Vec<u64>> = vals
            .iter()
            .map(|v| v.to_padded_words((52 * limbs).div_ceil(64)))
            .collect();
        let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
        B::expand(&refs, 52 * limbs).unwrap()
    }

    #[test]
    fn n0_prime_forced_values() {
        // N = -1 mod 2^52  ->  n0' = 1;  N = 1 mod 2^52  ->  n0' = 2^52 - 1
        let mut rng = ChaCha20Rng::seed_from_u64(20);
        let mut ns = random_moduli(&mut rng, 1024);
        for n in ns.iter_mut() {
            *n = n.sub(&n.mod_pow2(52)).add(&RefInt::from_u64((1 << 52) - 1));
        }
        let ctx = ctx_for(&ns, 1024, Flavor::Schoolbook, false);
        assert_eq!(ctx.n0_prime, LaneVector::splat(1));

        for n in ns.iter_mut() {
            *n = n.sub(&n.mod_pow2(52)).add(&RefInt::one());
        }
        let ctx = ctx_for(&ns, 1024, Flavor::Schoolbook, false);
        assert_eq!(ctx.n0_prime, LaneVector::splat((1 << 52) - 1));
    }

    #[test]
    fn context_invariants_vs_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for bits in [1024usize, 2048] {
            let ns = random_moduli(&mut rng, bits);
            let ctx = ctx_for(&ns, bits, Flavor::Schoolbook, false);
            let r_bits = 52 * ctx.limbs();
            for k in 0..8 {
                // N * N' == -1 mod R
                let prod = ns[k]
                    .mul(&ctx.n_prime().lane_value(k))
                    .add(&RefInt::one())
                    .mod_pow2(r_bits);
                assert!(prod.is_zero(), "lane {k}");
                // r2 == R^2 mod N by oracle long division
                let want = RefInt::pow2(r_bits).square().rem(&ns[k]);
                assert_eq!(ctx.r_squared().lane_value(k), want, "lane {k}");
            }
        }
    }

    #[test]
    fn context_rejects_bad_moduli() {
        let even = RefInt::from_u64(6).shl_bits(1000);
        let odd = sampling::random_odd_modulus(&mut ChaCha20Rng::seed_from_u64(1), 1024);
        let words: Vec<Vec<u64>> = (0..8)
            .map(|k| {
                if k == 3 {
                    even.to_padded_words(16)
                } else {
                    odd.to_padded_words(16)
                }
            })
            .collect();
        let refs: [&[u64]; 8] = std::array::from_fn(|k| words[k].as_slice());
        assert!(matches!(
            Ctx::new(&refs, 1024, Flavor::Schoolbook, false),
            Err(Error::EvenModulus { lane: 3 })
        ));
        assert!(matches!(
            Ctx::new(&refs, 512, Flavor::Schoolbook, false),
            Err(Error::UnsupportedSize { bits: 512 })
        ));
        assert!(matches!(
            Ctx::new(&refs, 1024, Flavor::Karatsuba, true),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn reduce_family_agrees_and_is_congruent() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let bits = 1024;
        let ns = random_moduli(&mut rng, bits);
        for (flavor, truncated) in [
            (Flavor::Schoolbook, false),
            (Flavor::Schoolbook, true),
            (Flavor::Karatsuba, false),
        ] {
            let ctx = ctx_for(&ns, bits, flavor, truncated);
            let m = ctx.limbs();
            let r_bits = 52 * m;
            for _ in 0..10 {
                let av: [RefInt; 8] = std::array::from_fn(|k| {
                    sampling::random_below(&mut rng, &ns[k].add(&ns[k]))
                });
                let bv: [RefInt; 8] = std::array::from_fn(|k| {
                    sampling::random_below(&mut rng, &ns[k].add(&ns[k]))
                });
                let a = to_batch(&av, m);
                let b = to_batch(&bv, m);
                let t = ctx.product(&a, &b).unwrap();
                let classic = ctx.reduce(&t).unwrap();
                let cios = ctx.mul_cios(&a, &b).unwrap();
                assert_eq!(classic, cios);
                if !(flavor == Flavor::Karatsuba && bits == 1024) {
                    assert_eq!(classic, ctx.reduce_truncated(&t).unwrap());
                } else {
                    assert!(matches!(
                        ctx.reduce_truncated(&t),
                        Err(Error::UnsupportedConfiguration(_))
                    ));
                }
                for k in 0..8 {
                    let want = refnum::montred(
                        &av[k].mul(&bv[k]),
                        &ns[k],
                        &refnum::neg_inverse_mod_pow2(&ns[k], r_bits),
                        r_bits,
                    );
                    assert_eq!(classic.lane_value(k), want);
                    assert!(
                        classic.lane_value(k).cmp_ref(&ns[k].add(&ns[k]))
                            == std::cmp::Ordering::Less
                    );
                }
            }
        }
    }

    #[test]
    fn reduce_zero_and_r_multiple() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let ns = random_moduli(&mut rng, 1024);
        let ctx = ctx_for(&ns, 1024, Flavor::Schoolbook, true);
        let m = ctx.limbs();
        let z = ctx.reduce(&B::zero(2 * m)).unwrap();
        assert!((0..8).all(|k| z.lane_value(k).is_zero()));

        // T = R*x: the q = 0 path; both reductions agree and are congruent.
        let xv: [RefInt; 8] =
            std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
        let mut t = B::zero(2 * m);
        let xb = to_batch(&xv, m);
        for i in 0..m {
            t.set_limb(m + i, xb.limb(i));
        }
        let (red, q) = ctx.reduce_with_quotient(&t).unwrap();
        assert!((0..8).all(|k| q.lane_value(k).is_zero()));
        assert_eq!(red, ctx.reduce_truncated(&t).unwrap());
        for k in 0..8 {
            assert_eq!(red.lane_value(k), xv[k]);
        }
    }

    #[test]
    fn mont_domain_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let ns = random_moduli(&mut rng, 1024);
        for flavor in [Flavor::Schoolbook, Flavor::Karatsuba] {
            let ctx = ctx_for(&ns, 1024, flavor, flavor == Flavor::Schoolbook);
            let m = ctx.limbs();
            let zero = ctx.to_mont(&B::zero(m)).unwrap();
            assert!((0..8).all(|k| ctx.from_mont(&zero).unwrap().lane_value(k).is_zero()));
            for _ in 0..5 {
                let xv: [RefInt; 8] =
                    std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
                let x = to_batch(&xv, m);
                let back = ctx.from_mont(&ctx.to_mont(&x).unwrap()).unwrap();
                for k in 0..8 {
                    assert_eq!(back.lane_value(k), xv[k]);
                }
            }
        }
    }

    #[test]
    fn divisibility_witness() {
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let ns = random_moduli(&mut rng, 1024);
        let ctx = ctx_for(&ns, 1024, Flavor::Schoolbook, false);
        let m = ctx.limbs();
        let av: [RefInt; 8] = std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
        let bv: [RefInt; 8] = std::array::from_fn(|k| sampling::random_below(&mut rng, &ns[k]));
        let t = ctx
            .product(&to_batch(&av, m), &to_batch(&bv, m))
            .unwrap();
        let (_, q) = ctx.reduce_with_quotient(&t).unwrap();
        for k in 0..8 {
            let sum = av[k].mul(&bv[k]).add(&q.lane_value(k).mul(&ns[k]));
            assert!(sum.mod_pow2(52 * m).is_zero());
        }
    }
}
