//! Lane-sliced big-integer batches in radix 2^52.
//!
//! A [`SlicedBatch`] stores `L` big integers transposed: limb `i` of every
//! lane shares one [`LaneVector`], so a single lane operation advances all
//! `L` numbers by one limb. Lane `k`'s value is `sum(limbs[i].lane(k) *
//! 2^(52*i))`.
//!
//! Conversions between this form and conventional little-endian 64-bit word
//! arrays are `expand` and `contract`; exponents use [`ExponentBatch`],
//! which transposes raw 64-bit words without any radix change.

use crate::lane::{LaneVector, LIMB_BITS, LIMB_MASK};
use crate::Error;

/// Operand bit sizes accepted on the split Karatsuba grid (which are not
/// multiples of 52; everything else must be a multiple of 52).
pub const KARATSUBA_BITS: [usize; 4] = [518, 1038, 2078, 4154];

/// Limb count for a `bits`-bit operand.
pub fn limbs_for_bits(bits: usize) -> usize {
    bits.div_ceil(LIMB_BITS as usize)
}

fn expand_bits_supported(bits: usize) -> bool {
    bits > 0 && (bits % LIMB_BITS as usize == 0 || KARATSUBA_BITS.contains(&bits))
}

/// A batch of `L` big integers in lane-sliced radix-2^52 form.
///
/// Normalized form keeps every lane of every limb below 2^52; operations
/// return unnormalized intermediates only where documented.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SlicedBatch<const L: usize> {
    limbs: Vec<LaneVector<L>>,
}

impl<const L: usize> SlicedBatch<L> {
    pub fn zero(n_limbs: usize) -> Self {
        SlicedBatch {
            limbs: vec![LaneVector::ZERO; n_limbs],
        }
    }

    pub fn from_limbs(limbs: Vec<LaneVector<L>>) -> Self {
        SlicedBatch { limbs }
    }

    pub fn n_limbs(&self) -> usize {
        self.limbs.len()
    }

    pub fn bit_capacity(&self) -> usize {
        self.limbs.len() * LIMB_BITS as usize
    }

    pub fn limb(&self, i: usize) -> LaneVector<L> {
        self.limbs[i]
    }


    pub fn set_limb(&mut self, i: usize, v: LaneVector<L>) {
        self.limbs[i] = v;
    }

    pub fn is_normalized(&self) -> bool {
        self.limbs
            .iter()
            .all(|l| l.lanes().iter().all(|&v| v <= LIMB_MASK))
    }

    /// Converts `L` little-endian 64-bit word arrays into sliced form.
    ///
    /// `target_bits` must be a multiple of 52 or one of the Karatsuba
    /// operand sizes; each value must fit in `target_bits` bits.
    pub fn expand(values: &[&[u64]; L], target_bits: usize) -> Result<Self, Error> {
        if !expand_bits_supported(target_bits) {
            return Err(Error::UnsupportedSize { bits: target_bits });
        }
        for (k, v) in values.iter().enumerate() {
            if value_bits(v) > target_bits {
                return Err(Error::ValueTooLarge {
                    lane: k,
                    bits: target_bits,
                });
            }
        }
        let n = limbs_for_bits(target_bits);
        let mut limbs = vec![LaneVector::ZERO; n];
        for i in 0..n {
            let bit_lo = i * LIMB_BITS as usize;
            limbs[i] = LaneVector::from_fn(|k| read_bits_52(values[k], bit_lo));
        }
        Ok(SlicedBatch { limbs })
    }

    /// Converts back to `L` little-endian word arrays of
    /// `ceil(52 * n_limbs / 64)` words each. Exact inverse of [`expand`] on
    /// its image.
    pub fn contract(&self) -> Vec<Vec<u64>> {
        debug_assert!(self.is_normalized());
        let total_bits = self.bit_capacity();
        let n_words = total_bits.div_ceil(64);
        (0..L).map(|k| self.lane_words(k, n_words)).collect()
    }

    /// Lane `k`'s value as `n_words` little-endian 64-bit words.
    pub fn lane_words(&self, k: usize, n_words: usize) -> Vec<u64> {
        let mut out = vec![0u64; n_words];
        for (i, l) in self.limbs.iter().enumerate() {
            let v = l.lane(k);
            let bit = i * LIMB_BITS as usize;
            let (w, off) = (bit / 64, bit % 64);
            if w < n_words {
                out[w] |= v << off;
            }
            if off + LIMB_BITS as usize > 64 && w + 1 < n_words {
                out[w + 1] |= v >> (64 - off);
            }
        }
        out
    }

    /// Lane `k`'s value, for oracle comparisons.
    pub fn lane_value(&self, k: usize) -> refnum::RefInt {
        refnum::RefInt::from_words(&self.lane_words(k, self.bit_capacity().div_ceil(64)))
    }

    /// Carry propagation pass. Returns the normalized batch; a carry out of
    /// the top limb is an overflow error.
    ///
    /// Requires every lane of every limb below 2^63 so the adds cannot wrap.
    pub fn normalize(&self) -> Result<Self, Error> {
        debug_assert!(self
            .limbs
            .iter()
            .all(|l| l.lanes().iter().all(|&v| v < 1 << 63)));
        let mut out = self.clone();
        let carry = out.carry_pass();
        if carry.is_zero() {
            Ok(out)
        } else {
            Err(Error::Overflow)
        }
    }

    /// In-place left-to-right carry propagation; returns the top carry-out.
    pub(crate) fn carry_pass(&mut self) -> LaneVector<L> {
        let mask = LaneVector::splat(LIMB_MASK);
        let mut carry = LaneVector::ZERO;
        for i in 0..self.limbs.len() {
            let t = self.limbs[i].add(carry);
            carry = t.shr(LIMB_BITS);
            self.limbs[i] = t.and(mask);
        }
        carry
    }

    /// Per lane: `value mod modulus`, assuming `value < 2 * modulus`.
    ///
    /// Branch-free subtract-and-select; the lane operation sequence does not
    /// depend on whether the subtraction is kept.
    pub fn cond_sub_modulus(&self, moduli: &SlicedBatch<L>) -> Result<Self, Error> {
        if moduli.n_limbs() != self.n_limbs() {
            return Err(Error::ShapeMismatch {
                expected: self.n_limbs(),
                got: moduli.n_limbs(),
            });
        }
        let (diff, borrow) = self.sub_borrow(moduli);
        // borrow == 0 means value >= modulus: keep the difference.
        let keep_diff = borrow.eq_mask(LaneVector::ZERO);
        let mut out = Self::zero(self.n_limbs());
        for i in 0..self.n_limbs() {
            out.limbs[i] = keep_diff.select(diff.limbs[i], self.limbs[i]);
        }
        Ok(out)
    }

    /// Limb-wise subtraction with borrow chain; returns (difference, borrow)
    /// where borrow is 1 in lanes where `other > self`. Both normalized.
    pub(crate) fn sub_borrow(&self, other: &SlicedBatch<L>) -> (Self, LaneVector<L>) {
        debug_assert_eq!(self.n_limbs(), other.n_limbs());
        let mask = LaneVector::splat(LIMB_MASK);
        let top = LaneVector::splat(1 << LIMB_BITS);
        let one = LaneVector::splat(1);
        let mut out = Self::zero(self.n_limbs());
        let mut borrow = LaneVector::ZERO;
        for i in 0..self.n_limbs() {
            // t = 2^52 + a - b - borrow, in [1, 2^53)
            let t = top.add(self.limbs[i]).sub(other.limbs[i]).sub(borrow);
            borrow = one.sub(t.shr(LIMB_BITS));
            out.limbs[i] = t.and(mask);
        }
        (out, borrow)
    }

    /// Limb-wise addition with carry chain over equal shapes; returns the
    /// normalized sum and the top carry (0 or 1 per lane).
    pub(crate) fn add_carry(&self, other: &SlicedBatch<L>) -> (Self, LaneVector<L>) {
        debug_assert_eq!(self.n_limbs(), other.n_limbs());
        let mask = LaneVector::splat(LIMB_MASK);
        let mut out = Self::zero(self.n_limbs());
        let mut carry = LaneVector::ZERO;
        for i in 0..self.n_limbs() {
            let t = self.limbs[i].add(other.limbs[i]).add(carry);
            carry = t.shr(LIMB_BITS);
            out.limbs[i] = t.and(mask);
        }
        (out, carry)
    }

    /// OR of all limbs, per lane.
    pub(crate) fn or_fold(&self) -> LaneVector<L> {
        let mut acc = self.limbs[0];
        for l in &self.limbs[1..] {
            acc = acc.or(*l);
        }
        acc
    }

    /// Copy of limbs `range` (limb-aligned chunk extraction; no lane ops).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        SlicedBatch {
            limbs: self.limbs[range].to_vec(),
        }
    }

    /// Zero-extends (or debug-checked truncates) to `n` limbs.
    pub(crate) fn resized(&self, n: usize) -> Self {
        let mut limbs = self.limbs.clone();
        if n < limbs.len() {
            debug_assert!(limbs[n..].iter().all(|l| l.is_zero()));
        }
        limbs.resize(n, LaneVector::ZERO);
        SlicedBatch { limbs }
    }

    /// Extracts `bit_len` bits starting at `bit_lo` into a fresh batch of
    /// `ceil(bit_len / 52)` limbs. Input must be normalized.
    pub(crate) fn extract_bits(&self, bit_lo: usize, bit_len: usize) -> Self {
        let n_out = bit_len.div_ceil(LIMB_BITS as usize);
        let mask = LaneVector::splat(LIMB_MASK);
        let mut out = Self::zero(n_out);
        let j0 = bit_lo / LIMB_BITS as usize;
        let off = (bit_lo % LIMB_BITS as usize) as u32;
        for i in 0..n_out {
            let lo = if j0 + i < self.limbs.len() {
                self.limbs[j0 + i]
            } else {
                LaneVector::ZERO
            };
            let mut v = if off == 0 { lo } else { lo.shr(off) };
            if off != 0 {
                if let Some(&hi) = self.limbs.get(j0 + i + 1) {
                    v = v.or(hi.shl(LIMB_BITS - off));
                }
            }
            out.limbs[i] = v.and(mask);
        }
        // Trim the top limb to the requested bit length.
        let top_bits = bit_len - (n_out - 1) * LIMB_BITS as usize;
        if top_bits < LIMB_BITS as usize {
            let m = LaneVector::splat((1u64 << top_bits) - 1);
            out.limbs[n_out - 1] = out.limbs[n_out - 1].and(m);
        }
        out
    }

    /// Adds `src << bit_offset` into `self` without carry propagation.
    /// Limbs may exceed 2^52 afterwards; the caller runs a carry pass.
    pub(crate) fn add_shifted_bits(&mut self, src: &SlicedBatch<L>, bit_offset: usize) {
        let j0 = bit_offset / LIMB_BITS as usize;
        let s = (bit_offset % LIMB_BITS as usize) as u32;
        let mask = LaneVector::splat(LIMB_MASK);
        for (i, &l) in src.limbs.iter().enumerate() {
            if s == 0 {
                self.limbs[j0 + i] = self.limbs[j0 + i].add(l);
            } else {
                let lo = l.shl(s).and(mask);
                self.limbs[j0 + i] = self.limbs[j0 + i].add(lo);
                let hi = l.shr(LIMB_BITS - s);
                self.limbs[j0 + i + 1] = self.limbs[j0 + i + 1].add(hi);
            }
        }
    }

    /// Subtracts `sub` from `self` (same shape), where `self` may hold
    /// unnormalized limbs below 2^62. Underflow is absorbed limb-wise by
    /// borrowing; the value must be mathematically non-negative, checked in
    /// debug builds by the caller via the final carry pass.
    pub(crate) fn sub_in_place_unnormalized(&mut self, sub: &SlicedBatch<L>, at_limb: usize) {
        // Add (2^52 - 1 - s) + 1 per limb and cancel the bias with a
        // running borrow, staying in unsigned lanes throughout.
        let mask = LaneVector::splat(LIMB_MASK);
        let top = LaneVector::splat(1 << LIMB_BITS);
        let one = LaneVector::splat(1);
        let mut borrow = LaneVector::ZERO;
        for i in 0..sub.limbs.len() {
            let idx = at_limb + i;
            // t = 2^52 + acc_low - s - borrow; acc keeps its high part.
            let acc = self.limbs[idx];
            let acc_low = acc.and(mask);
            let t = top.add(acc_low).sub(sub.limbs[i]).sub(borrow);
            borrow = one.sub(t.shr(LIMB_BITS));
            self.limbs[idx] = acc.sub(acc_low).add(t.and(mask));
        }
        // Propagate the final borrow into the next limb.
        let mut idx = at_limb + sub.limbs.len();
        let mut b = borrow;
        while !b.is_zero() {
            debug_assert!(idx < self.limbs.len(), "borrow ran off the top");
            let acc = self.limbs[idx];
            let acc_low = acc.and(mask);
            let t = top.add(acc_low).sub(b);
            b = one.sub(t.shr(LIMB_BITS));
            self.limbs[idx] = acc.sub(acc_low).add(t.and(mask));
            idx += 1;
        }
    }
}

fn value_bits(words: &[u64]) -> usize {
    for (i, &w) in words.iter().enumerate().rev() {
        if w != 0 {
            return 64 * i + 64 - w.leading_zeros() as usize;
        }
    }
    0
}

/// Reads 52 bits of a little-endian word array starting at `bit_lo`.
fn read_bits_52(words: &[u64], bit_lo: usize) -> u64 {
    let (w, off) = (bit_lo / 64, bit_lo % 64);
    let mut v = words.get(w).copied().unwrap_or(0) >> off;
    if off > 12 {
        v |= words.get(w + 1).copied().unwrap_or(0) << (64 - off);
    }
    v & LIMB_MASK
}

/// A batch of `L` exponents stored as transposed raw 64-bit words.
#[derive(Clone, Debug)]
pub struct ExponentBatch<const L: usize> {
    words: Vec<LaneVector<L>>,
    bit_length: usize,
}

impl<const L: usize> ExponentBatch<L> {
    /// Transposes `L` exponents (little-endian 64-bit words) sharing the
    /// declared bit length `s`; shorter exponents are zero-padded on top.
    pub fn expand64(exponents: &[&[u64]; L], s: usize) -> Result<Self, Error> {
        if s == 0 {
            return Err(Error::UnsupportedSize { bits: 0 });
        }
        for (k, e) in exponents.iter().enumerate() {
            if value_bits(e) > s {
                return Err(Error::ValueTooLarge { lane: k, bits: s });
            }
        }
        let t64 = s.div_ceil(64);
        let words = (0..t64)
            .map(|i| LaneVector::from_fn(|k| exponents[k].get(i).copied().unwrap_or(0)))
            .collect();
        Ok(ExponentBatch {
            words,
            bit_length: s,
        })
    }

    pub fn bit_length(&self) -> usize {
        self.bit_length
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn word(&self, i: usize) -> LaneVector<L> {
        self.words.get(i).copied().unwrap_or(LaneVector::ZERO)
    }
}

/// Parses lowercase/uppercase big-endian hex (no prefix) into little-endian
/// 64-bit words.
pub fn parse_hex(s: &str) -> Result<Vec<u64>, Error> {
    let s = s.trim();
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(Error::BadHex(s.chars().take(32).collect()));
    }
    let mut words = vec![0u64; s.len().div_ceil(16)];
    for (i, c) in s.chars().rev().enumerate() {
        let d = c.to_digit(16).unwrap() as u64;
        words[i / 16] |= d << (4 * (i % 16));
    }
    Ok(words)
}

/// Formats little-endian words as big-endian lowercase hex with exactly
/// `ceil(bits / 4)` digits.
pub fn format_hex(words: &[u64], bits: usize) -> String {
    let digits = bits.div_ceil(4);
    let mut out = String::with_capacity(digits);
    for i in (0..digits).rev() {
        let w = words.get(i / 16).copied().unwrap_or(0);
        let d = (w >> (4 * (i % 16))) & 0xf;
        out.push(char::from_digit(d as u32, 16).unwrap());
    }
    out
}
