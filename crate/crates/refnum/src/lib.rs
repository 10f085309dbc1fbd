//! Reference multi-precision integer arithmetic.
//!
//! This crate exists to check other bignum code, not to be fast. Everything
//! here is textbook: schoolbook multiplication, Knuth division, scalar
//! Montgomery reduction, square-and-multiply exponentiation. It has no
//! dependencies and deliberately shares no code with the batch arithmetic
//! crates it is used to verify.

use std::cmp::Ordering;

/// An arbitrary-precision non-negative integer.
///
/// Words are 64-bit, little-endian (word 0 is least significant). The
/// canonical form has no trailing zero words; the value zero is a single
/// zero word.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RefInt {
    words: Vec<u64>,
}

impl RefInt {
    pub fn zero() -> Self {
        RefInt { words: vec![0] }
    }

    pub fn one() -> Self {
        RefInt { words: vec![1] }
    }

    pub fn from_u64(v: u64) -> Self {
        RefInt { words: vec![v] }
    }

    /// Builds a value from little-endian 64-bit words (trailing zeros allowed).
    pub fn from_words(words: &[u64]) -> Self {
        let mut w = words.to_vec();
        trim(&mut w);
        RefInt { words: w }
    }

    /// Little-endian words in canonical form.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Little-endian words zero-padded to `len` (panics if the value needs more).
    pub fn to_padded_words(&self, len: usize) -> Vec<u64> {
        assert!(
            self.words.len() <= len || self.is_zero(),
            "value does not fit in {len} words"
        );
        let mut out = self.words.clone();
        out.resize(len, 0);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.words == [0]
    }

    pub fn is_odd(&self) -> bool {
        self.words[0] & 1 == 1
    }

    /// Bit length; zero has bit length 0.
    pub fn bits(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            let top = *self.words.last().unwrap();
            64 * self.words.len() - top.leading_zeros() as usize
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        w < self.words.len() && (self.words[w] >> b) & 1 == 1
    }

    pub fn cmp_ref(&self, other: &RefInt) -> Ordering {
        match self.words.len().cmp(&other.words.len()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        for i in (0..self.words.len()).rev() {
            match self.words[i].cmp(&other.words[i]) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    pub fn add(&self, other: &RefInt) -> RefInt {
        let n = self.words.len().max(other.words.len());
        let mut out = Vec::with_capacity(n + 1);
        let mut carry = 0u64;
        for i in 0..n {
            let a = self.words.get(i).copied().unwrap_or(0);
            let b = other.words.get(i).copied().unwrap_or(0);
            let (s1, c1) = a.overflowing_add(b);
            let (s2, c2) = s1.overflowing_add(carry);
            out.push(s2);
            carry = (c1 as u64) + (c2 as u64);
        }
        out.push(carry);
        RefInt::from_words(&out)
    }

    /// `self - other`; panics if the result would be negative.
    pub fn sub(&self, other: &RefInt) -> RefInt {
        assert!(
            self.cmp_ref(other) != Ordering::Less,
            "RefInt::sub would underflow"
        );
        let mut out = Vec::with_capacity(self.words.len());
        let mut borrow = 0u64;
        for i in 0..self.words.len() {
            let a = self.words[i];
            let b = other.words.get(i).copied().unwrap_or(0);
            let (d1, b1) = a.overflowing_sub(b);
            let (d2, b2) = d1.overflowing_sub(borrow);
            out.push(d2);
            borrow = (b1 as u64) + (b2 as u64);
        }
        debug_assert_eq!(borrow, 0);
        RefInt::from_words(&out)
    }

    pub fn mul(&self, other: &RefInt) -> RefInt {
        if self.is_zero() || other.is_zero() {
            return RefInt::zero();
        }
        let mut out = vec![0u64; self.words.len() + other.words.len()];
        for (i, &a) in self.words.iter().enumerate() {
            let mut carry = 0u128;
            for (j, &b) in other.words.iter().enumerate() {
                let t = out[i + j] as u128 + (a as u128) * (b as u128) + carry;
                out[i + j] = t as u64;
                carry = t >> 64;
            }
            out[i + other.words.len()] = carry as u64;
        }
        RefInt::from_words(&out)
    }

    pub fn square(&self) -> RefInt {
        self.mul(self)
    }

    pub fn mul_u64(&self, v: u64) -> RefInt {
        self.mul(&RefInt::from_u64(v))
    }

    /// Knuth schoolbook division: returns `(quotient, remainder)`.
    ///
    /// Panics if `divisor` is zero.
    pub fn divmod(&self, divisor: &RefInt) -> (RefInt, RefInt) {
        assert!(!divisor.is_zero(), "division by zero");
        match self.cmp_ref(divisor) {
            Ordering::Less => return (RefInt::zero(), self.clone()),
            Ordering::Equal => return (RefInt::one(), RefInt::zero()),
            Ordering::Greater => {}
        }
        if divisor.words.len() == 1 {
            let d = divisor.words[0];
            let mut q = vec![0u64; self.words.len()];
            let mut rem = 0u128;
            for i in (0..self.words.len()).rev() {
                let cur = (rem << 64) | self.words[i] as u128;
                q[i] = (cur / d as u128) as u64;
                rem = cur % d as u128;
            }
            return (RefInt::from_words(&q), RefInt::from_u64(rem as u64));
        }

        // Normalize so the divisor's top bit is set (Knuth Algorithm D).
        let shift = divisor.words.last().unwrap().leading_zeros() as usize;
        let u = self.shl_bits(shift);
        let v = divisor.shl_bits(shift);
        let n = v.words.len();
        let mut uw = u.words.clone();
        uw.push(0);
        let m = uw.len() - n - 1;
        let vtop = v.words[n - 1];
        let vnext = v.words[n - 2];
        let mut q = vec![0u64; m + 1];

        for j in (0..=m).rev() {
            let top2 = ((uw[j + n] as u128) << 64) | uw[j + n - 1] as u128;
            let mut qhat = top2 / vtop as u128;
            let mut rhat = top2 % vtop as u128;
            if qhat > u64::MAX as u128 {
                qhat = u64::MAX as u128;
                rhat = top2 - qhat * vtop as u128;
            }
            while rhat <= u64::MAX as u128
                && qhat * vnext as u128 > ((rhat << 64) | uw[j + n - 2] as u128)
            {
                qhat -= 1;
                rhat += vtop as u128;
            }
            // Multiply-subtract qhat * v from u[j .. j+n].
            let mut borrow = 0i128;
            let mut carry = 0u128;
            for i in 0..n {
                let p = qhat * v.words[i] as u128 + carry;
                carry = p >> 64;
                let t = uw[j + i] as i128 - (p as u64) as i128 + borrow;
                uw[j + i] = t as u64;
                borrow = t >> 64;
            }
            let t = uw[j + n] as i128 - carry as i128 + borrow;
            uw[j + n] = t as u64;
            if t < 0 {
                // qhat was one too large: add v back.
                qhat -= 1;
                let mut c = 0u128;
                for i in 0..n {
                    let s = uw[j + i] as u128 + v.words[i] as u128 + c;
                    uw[j + i] = s as u64;
                    c = s >> 64;
                }
                uw[j + n] = uw[j + n].wrapping_add(c as u64);
            }
            q[j] = qhat as u64;
        }
        let rem = RefInt::from_words(&uw[..n]).shr_bits(shift);
        (RefInt::from_words(&q), rem)
    }

    pub fn rem(&self, modulus: &RefInt) -> RefInt {
        self.divmod(modulus).1
    }

    pub fn shl_bits(&self, k: usize) -> RefInt {
        if self.is_zero() || k == 0 {
            return if k == 0 {
                self.clone()
            } else {
                RefInt::zero()
            };
        }
        let (words, bits) = (k / 64, k % 64);
        let mut out = vec![0u64; self.words.len() + words + 1];
        for (i, &w) in self.words.iter().enumerate() {
            out[i + words] |= w << bits;
            if bits != 0 {
                out[i + words + 1] |= w >> (64 - bits);
            }
        }
        RefInt::from_words(&out)
    }

    pub fn shr_bits(&self, k: usize) -> RefInt {
        let (words, bits) = (k / 64, k % 64);
        if words >= self.words.len() {
            return RefInt::zero();
        }
        let mut out = vec![0u64; self.words.len() - words];
        for i in 0..out.len() {
            let lo = self.words[i + words] >> bits;
            let hi = if bits != 0 && i + words + 1 < self.words.len() {
                self.words[i + words + 1] << (64 - bits)
            } else {
                0
            };
            out[i] = lo | hi;
        }
        RefInt::from_words(&out)
    }

    /// `self mod 2^bits`.
    pub fn mod_pow2(&self, bits: usize) -> RefInt {
        let words = bits / 64;
        let rem = bits % 64;
        let mut out: Vec<u64> = self.words.iter().copied().take(words + 1).collect();
        if out.len() > words {
            if rem == 0 {
                out.truncate(words);
            } else {
                out[words] &= (1u64 << rem) - 1;
            }
        }
        if out.is_empty() {
            out.push(0);
        }
        RefInt::from_words(&out)
    }

    /// 2^bits.
    pub fn pow2(bits: usize) -> RefInt {
        let mut w = vec![0u64; bits / 64 + 1];
        w[bits / 64] = 1 << (bits % 64);
        RefInt::from_words(&w)
    }
}

fn trim(w: &mut Vec<u64>) {
    while w.len() > 1 && *w.last().unwrap() == 0 {
        w.pop();
    }
    if w.is_empty() {
        w.push(0);
    }
}

/// Extended Euclid on non-negative integers.
///
/// Returns `(g, x, sx, y, sy)` with `sx * x * a + sy * y * b = g`, where
/// `sx`/`sy` are the signs (`1` or `-1`) of the Bezout coefficients.
pub fn egcd(a: &RefInt, b: &RefInt) -> (RefInt, RefInt, i8, RefInt, i8) {
    // Iterative, with explicit sign tracking since RefInt is unsigned.
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut x0, mut x1) = (RefInt::one(), RefInt::zero());
    let (mut y0, mut y1) = (RefInt::zero(), RefInt::one());
    let (mut sx0, mut sx1, mut sy0, mut sy1) = (1i8, 1i8, 1i8, 1i8);
    while !r1.is_zero() {
        let (q, r) = r0.divmod(&r1);
        // (x0, sx0) - q*(x1, sx1)
        let qx = q.mul(&x1);
        let (nx, snx) = signed_sub(&x0, sx0, &qx, sx1);
        let qy = q.mul(&y1);
        let (ny, sny) = signed_sub(&y0, sy0, &qy, sy1);
        r0 = r1;
        r1 = r;
        x0 = x1;
        sx0 = sx1;
        x1 = nx;
        sx1 = snx;
        y0 = y1;
        sy0 = sy1;
        y1 = ny;
        sy1 = sny;
    }
    (r0, x0, sx0, y0, sy0)
}

// (a, sa) - (b, sb) over signed magnitudes.
fn signed_sub(a: &RefInt, sa: i8, b: &RefInt, sb: i8) -> (RefInt, i8) {
    if sa != sb {
        // a - (-b) = a + b (sign of a), or -a - b = -(a + b)
        (a.add(b), sa)
    } else if a.cmp_ref(b) != Ordering::Less {
        (a.sub(b), sa)
    } else {
        (b.sub(a), -sa)
    }
}

/// Modular inverse of `a` mod `m` for coprime inputs, else `None`.
pub fn inverse_mod(a: &RefInt, m: &RefInt) -> Option<RefInt> {
    let (g, x, sx, _, _) = egcd(&a.rem(m), m);
    if g != RefInt::one() {
        return None;
    }
    let xr = x.rem(m);
    Some(if sx < 0 && !xr.is_zero() {
        m.sub(&xr)
    } else {
        xr
    })
}

/// Inverse of odd `n` modulo 2^bits, by Newton lifting.
pub fn inverse_mod_pow2(n: &RefInt, bits: usize) -> RefInt {
    assert!(n.is_odd());
    let mut x = RefInt::one();
    let mut prec = 1;
    while prec < bits {
        prec = (prec * 2).min(bits);
        // x <- x * (2 - n*x) mod 2^prec
        let nx = n.mod_pow2(prec).mul(&x).mod_pow2(prec);
        let two_minus = RefInt::pow2(prec).add(&RefInt::from_u64(2)).sub(&nx);
        x = x.mul(&two_minus).mod_pow2(prec);
    }
    x
}

/// Scalar Montgomery reduction: `(t + q*n) / r` with `q = t*n_prime mod r`,
/// for `r = 2^r_bits`. The result is congruent to `t * r^-1 (mod n)` and is
/// `< 2n` whenever `t < 4n^2 <= n * r`.
pub fn montred(t: &RefInt, n: &RefInt, n_prime: &RefInt, r_bits: usize) -> RefInt {
    let q = t.mod_pow2(r_bits).mul(n_prime).mod_pow2(r_bits);
    let sum = t.add(&q.mul(n));
    debug_assert!(sum.mod_pow2(r_bits).is_zero(), "montred inputs not exact");
    sum.shr_bits(r_bits)
}

/// `(-n)^-1 mod 2^r_bits` for odd `n`: the Montgomery `n_prime` constant.
pub fn neg_inverse_mod_pow2(n: &RefInt, r_bits: usize) -> RefInt {
    let inv = inverse_mod_pow2(n, r_bits);
    if inv.is_zero() {
        inv
    } else {
        RefInt::pow2(r_bits).sub(&inv)
    }
}

/// `base^exp mod modulus` by left-to-right square-and-multiply.
///
/// Odd moduli go through scalar Montgomery arithmetic; even moduli fall back
/// to divmod after every step.
pub fn modexp(base: &RefInt, exp: &RefInt, modulus: &RefInt) -> RefInt {
    assert!(!modulus.is_zero());
    if modulus == &RefInt::one() {
        return RefInt::zero();
    }
    if exp.is_zero() {
        return RefInt::one();
    }
    if modulus.is_odd() {
        return modexp_mont(base, exp, modulus);
    }
    let mut acc = RefInt::one();
    let b = base.rem(modulus);
    for i in (0..exp.bits()).rev() {
        acc = acc.square().rem(modulus);
        if exp.bit(i) {
            acc = acc.mul(&b).rem(modulus);
        }
    }
    acc
}

fn modexp_mont(base: &RefInt, exp: &RefInt, modulus: &RefInt) -> RefInt {
    let r_bits = 64 * modulus.words().len() + 64;
    let n_prime = neg_inverse_mod_pow2(modulus, r_bits);
    let r_mod_n = RefInt::pow2(r_bits).rem(modulus);
    let r2 = r_mod_n.square().rem(modulus);
    let to_mont = |x: &RefInt| montred(&x.mul(&r2), modulus, &n_prime, r_bits);
    let bm = to_mont(&base.rem(modulus));
    let mut acc = to_mont(&RefInt::one());
    for i in (0..exp.bits()).rev() {
        acc = montred(&acc.square(), modulus, &n_prime, r_bits);
        if exp.bit(i) {
            acc = montred(&acc.mul(&bm), modulus, &n_prime, r_bits);
        }
    }
    let out = montred(&acc, modulus, &n_prime, r_bits);
    out.rem(modulus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: u128) -> RefInt {
        RefInt::from_words(&[v as u64, (v >> 64) as u64])
    }

    #[test]
    fn zero_is_single_word() {
        assert_eq!(RefInt::zero().words(), &[0]);
        assert_eq!(RefInt::from_words(&[0, 0, 0]).words(), &[0]);
        assert_eq!(RefInt::from_u64(7).sub(&RefInt::from_u64(7)), RefInt::zero());
    }

    #[test]
    fn divmod_small_exhaustive() {
        // a = q*b + r with 0 <= r < b, for all a, b < 2^10.
        for a in 0u64..1024 {
            for b in 1u64..1024 {
                let (q, rem) = RefInt::from_u64(a).divmod(&RefInt::from_u64(b));
                assert_eq!(q.words()[0] * b + rem.words()[0], a);
                assert!(rem.words()[0] < b);
            }
        }
    }

    #[test]
    fn divmod_trivia() {
        let (q, rem) = RefInt::from_u64(7).divmod(&RefInt::from_u64(3));
        assert_eq!((q, rem), (RefInt::from_u64(2), RefInt::from_u64(1)));
    }

    #[test]
    fn divmod_multiword() {
        // Cases chosen to hit the qhat-correction and add-back paths.
        let a = RefInt::from_words(&[0, 0, 1]); // 2^128
        let b = RefInt::from_words(&[u64::MAX, 1]);
        let (q, rem) = a.divmod(&b);
        assert_eq!(q.mul(&b).add(&rem), a);
        assert!(rem.cmp_ref(&b) == Ordering::Less);

        let a = RefInt::from_words(&[5, u64::MAX, u64::MAX - 1]);
        let b = RefInt::from_words(&[u64::MAX, u64::MAX]);
        let (q, rem) = a.divmod(&b);
        assert_eq!(q.mul(&b).add(&rem), a);
        assert!(rem.cmp_ref(&b) == Ordering::Less);
    }

    #[test]
    fn mul_matches_u128() {
        for a in [0u128, 1, 0xffff_ffff_ffff_ffff, 1 << 80, (1 << 100) + 12345] {
            for b in [0u128, 3, 1 << 27, (1 << 63) + 1] {
                if let Some(p) = a.checked_mul(b) {
                    assert_eq!(r(a).mul(&r(b)), r(p));
                }
            }
        }
    }

    #[test]
    fn modexp_edges() {
        let m = RefInt::from_u64(1025);
        assert_eq!(modexp(&r(2), &RefInt::zero(), &m), RefInt::one());
        assert_eq!(
            modexp(&r(2), &RefInt::from_u64(10), &m),
            RefInt::from_u64(1024 % 1025)
        );
        assert_eq!(modexp(&r(5), &r(1), &m), RefInt::from_u64(5));
        assert_eq!(modexp(&r(5), &r(3), &RefInt::one()), RefInt::zero());
    }

    #[test]
    fn modexp_small_exhaustive() {
        for a in 0u64..24 {
            for e in 0u64..24 {
                for m in 1u64..24 {
                    let want = (0..e).fold(1u64 % m, |acc, _| acc * a % m);
                    let got = modexp(
                        &RefInt::from_u64(a),
                        &RefInt::from_u64(e),
                        &RefInt::from_u64(m),
                    );
                    assert_eq!(got.words()[0], want, "a={a} e={e} m={m}");
                }
            }
        }
    }

    #[test]
    fn egcd_bezout() {
        let cases = [
            (240u64, 46u64),
            (17, 5),
            (1, 999),
            (12345, 54321),
            (u64::MAX, 600),
        ];
        for (a, b) in cases {
            let (g, x, sx, y, sy) = egcd(&RefInt::from_u64(a), &RefInt::from_u64(b));
            let ax = x.mul_u64(a);
            let by = y.mul_u64(b);
            let lhs = signed_sub(&ax, sx, &by, -sy).0;
            assert_eq!(lhs, g, "bezout identity for ({a}, {b})");
        }
    }

    #[test]
    fn inverse_mod_works() {
        let m = RefInt::from_u64(101);
        for a in 1u64..101 {
            let inv = inverse_mod(&RefInt::from_u64(a), &m).unwrap();
            assert_eq!(inv.mul_u64(a).rem(&m), RefInt::one());
        }
        assert!(inverse_mod(&RefInt::from_u64(4), &RefInt::from_u64(8)).is_none());
    }

    #[test]
    fn montred_matches_divmod() {
        // montred(t) == t * r^-1 mod n, checked through inverse_mod.
        let n = RefInt::from_words(&[0x1234_5678_9abc_def1, 0xfedc_ba98]);
        let r_bits = 192;
        let np = neg_inverse_mod_pow2(&n, r_bits);
        // n * n' == -1 mod 2^r_bits
        let prod = n.mul(&np).add(&RefInt::one()).mod_pow2(r_bits);
        assert!(prod.is_zero());
        let rinv = inverse_mod(&RefInt::pow2(r_bits), &n).unwrap();
        let t = RefInt::from_words(&[7, 9, 0xdead_beef, 3]);
        let c = montred(&t, &n, &np, r_bits);
        assert!(c.cmp_ref(&n.add(&n)) == Ordering::Less);
        assert_eq!(c.rem(&n), t.mul(&rinv).rem(&n));
    }

    #[test]
    fn inverse_mod_pow2_lifts() {
        let n = RefInt::from_words(&[0xdead_beef_0000_0001, 0x1111]);
        for bits in [1, 5, 52, 64, 100, 130] {
            let inv = inverse_mod_pow2(&n, bits);
            assert_eq!(n.mul(&inv).mod_pow2(bits), RefInt::one().mod_pow2(bits));
        }
    }
}
