//! Lane vectors and the 52-bit fused multiply-add primitives.
//!
//! A [`LaneVector`] holds `L` independent 64-bit values, one per lane; the
//! whole batch advances through every operation together. `L` is 8 (the
//! 512-bit register layout) or 4 (the 256-bit layout).
//!
//! Two backends implement the primitives: a portable one built on 64x64->128
//! widening multiplies, and a hardware path using the AVX-512 IFMA
//! instructions when the CPU has them. Both produce bit-identical results;
//! the portable path is the default so counter audits behave the same
//! everywhere.

use crate::trace::{self, OpKind};
use std::cell::Cell;

/// Bits per limb of the sliced representation.
pub const LIMB_BITS: u32 = 52;
/// Mask of the low 52 bits.
pub const LIMB_MASK: u64 = (1 << LIMB_BITS) - 1;

/// Supported lane counts.
pub const SUPPORTED_LANES: [usize; 2] = [8, 4];

/// Which implementation carries out the lane primitives.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Backend {
    /// Widening-multiply arithmetic; always available.
    Portable,
    /// AVX-512 IFMA (`vpmadd52luq`/`vpmadd52huq`); x86-64 with `avx512ifma`.
    Ifma,
}

thread_local! {
    static BACKEND: Cell<Backend> = const { Cell::new(Backend::Portable) };
}

/// True when the hardware IFMA path can run on this CPU.
pub fn ifma_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx512ifma")
            && std::arch::is_x86_feature_detected!("avx512vl")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Selects the backend for the current thread.
pub fn set_backend(b: Backend) -> Result<(), crate::Error> {
    if b == Backend::Ifma && !ifma_available() {
        return Err(crate::Error::BackendUnavailable);
    }
    BACKEND.with(|c| c.set(b));
    Ok(())
}

/// The backend in effect on the current thread.
pub fn backend() -> Backend {
    BACKEND.with(|c| c.get())
}

/// `L` parallel unsigned 64-bit values.
///
/// No magnitude invariant is imposed: accumulators routinely exceed 2^52,
/// and additions wrap modulo 2^64 per lane.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LaneVector<const L: usize> {
    lanes: [u64; L],
}

impl<const L: usize> LaneVector<L> {
    pub const ZERO: Self = LaneVector { lanes: [0; L] };

    pub fn new(lanes: [u64; L]) -> Self {
        LaneVector { lanes }
    }

    /// The same value in every lane.
    pub fn splat(v: u64) -> Self {
        LaneVector { lanes: [v; L] }
    }

    pub fn from_fn(f: impl FnMut(usize) -> u64) -> Self {
        LaneVector {
            lanes: std::array::from_fn(f),
        }
    }

    pub fn lane(&self, k: usize) -> u64 {
        self.lanes[k]
    }

    pub fn lanes(&self) -> &[u64; L] {
        &self.lanes
    }

    pub fn is_zero(&self) -> bool {
        self.lanes.iter().all(|&v| v == 0)
    }

    /// `self + (b mod 2^52) * (c mod 2^52) mod 2^52`, per lane.
    ///
    /// The operands are masked to 52 bits by the primitive itself, matching
    /// the instruction semantics; the accumulator is added in full width.
    #[inline]
    pub fn madd52lo(self, b: Self, c: Self) -> Self {
        trace::record(OpKind::MaddLo);
        match backend() {
            Backend::Portable => Self::from_fn(|k| {
                let p = ((b.lanes[k] & LIMB_MASK) as u128) * ((c.lanes[k] & LIMB_MASK) as u128);
                self.lanes[k].wrapping_add(p as u64 & LIMB_MASK)
            }),
            Backend::Ifma => ifma::madd52lo(self, b, c),
        }
    }

    /// `self + floor((b mod 2^52) * (c mod 2^52) / 2^52)`, per lane.
    #[inline]
    pub fn madd52hi(self, b: Self, c: Self) -> Self {
        trace::record(OpKind::MaddHi);
        match backend() {
            Backend::Portable => Self::from_fn(|k| {
                let p = ((b.lanes[k] & LIMB_MASK) as u128) * ((c.lanes[k] & LIMB_MASK) as u128);
                self.lanes[k].wrapping_add((p >> LIMB_BITS) as u64)
            }),
            Backend::Ifma => ifma::madd52hi(self, b, c),
        }
    }

    /// Lane-wise wrapping addition.
    #[inline]
    pub fn add(self, other: Self) -> Self {
        trace::record(OpKind::Add);
        Self::from_fn(|k| self.lanes[k].wrapping_add(other.lanes[k]))
    }

    /// Lane-wise wrapping subtraction.
    #[inline]
    pub fn sub(self, other: Self) -> Self {
        trace::record(OpKind::Sub);
        Self::from_fn(|k| self.lanes[k].wrapping_sub(other.lanes[k]))
    }

    /// Logical right shift by `k` bits, `k` in `[0, 63]`.
    #[inline]
    pub fn shr(self, k: u32) -> Self {
        debug_assert!(k < 64);
        trace::record(OpKind::Shr(k));
        Self::from_fn(|i| self.lanes[i] >> k)
    }

    /// Left shift by `k` bits, `k` in `[0, 63]`.
    #[inline]
    pub fn shl(self, k: u32) -> Self {
        debug_assert!(k < 64);
        trace::record(OpKind::Shl(k));
        Self::from_fn(|i| self.lanes[i] << k)
    }

    #[inline]
    pub fn and(self, other: Self) -> Self {
        trace::record(OpKind::And);
        Self::from_fn(|k| self.lanes[k] & other.lanes[k])
    }

    #[inline]
    pub fn or(self, other: Self) -> Self {
        trace::record(OpKind::Or);
        Self::from_fn(|k| self.lanes[k] | other.lanes[k])
    }

    /// All-ones where lanes are equal, all-zeros elsewhere.
    #[inline]
    pub fn eq_mask(self, other: Self) -> Self {
        trace::record(OpKind::EqMask);
        Self::from_fn(|k| if self.lanes[k] == other.lanes[k] { u64::MAX } else { 0 })
    }

    /// Per lane: `a` where `self` (a mask of all-ones/all-zeros) is set, else `b`.
    #[inline]
    pub fn select(self, a: Self, b: Self) -> Self {
        trace::record(OpKind::Select);
        Self::from_fn(|k| (a.lanes[k] & self.lanes[k]) | (b.lanes[k] & !self.lanes[k]))
    }

    /// 1 in lanes where `self` is nonzero, else 0. Branch-free.
    #[inline]
    pub fn nonzero_flag(self) -> Self {
        let m = self.eq_mask(Self::ZERO);
        m.select(Self::ZERO, Self::splat(1))
    }
}

#[cfg(target_arch = "x86_64")]
mod ifma {
    //! Hardware lane primitives. Callers guarantee, via [`super::set_backend`],
    //! that `avx512ifma` (+`avx512vl` for L=4) is present.
    use super::LaneVector;
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx512ifma")]
    unsafe fn lo8(a: [u64; 8], b: [u64; 8], c: [u64; 8]) -> [u64; 8] {
        let (pa, pb, pc) = (
            _mm512_loadu_si512(a.as_ptr().cast()),
            _mm512_loadu_si512(b.as_ptr().cast()),
            _mm512_loadu_si512(c.as_ptr().cast()),
        );
        let r = _mm512_madd52lo_epu64(pa, pb, pc);
        let mut out = [0u64; 8];
        _mm512_storeu_si512(out.as_mut_ptr().cast(), r);
        out
    }

    #[target_feature(enable = "avx512ifma")]
    unsafe fn hi8(a: [u64; 8], b: [u64; 8], c: [u64; 8]) -> [u64; 8] {
        let (pa, pb, pc) = (
            _mm512_loadu_si512(a.as_ptr().cast()),
            _mm512_loadu_si512(b.as_ptr().cast()),
            _mm512_loadu_si512(c.as_ptr().cast()),
        );
        let r = _mm512_madd52hi_epu64(pa, pb, pc);
        let mut out = [0u64; 8];
        _mm512_storeu_si512(out.as_mut_ptr().cast(), r);
        out
    }

    #[target_feature(enable = "avx512ifma,avx512vl")]
    unsafe fn lo4(a: [u64; 4], b: [u64; 4], c: [u64; 4]) -> [u64; 4] {
        let (pa, pb, pc) = (
            _mm256_loadu_si256(a.as_ptr().cast()),
            _mm256_loadu_si256(b.as_ptr().cast()),
            _mm256_loadu_si256(c.as_ptr().cast()),
        );
        let r = _mm256_madd52lo_epu64(pa, pb, pc);
        let mut out = [0u64; 4];
        _mm256_storeu_si256(out.as_mut_ptr().cast(), r);
        out
    }

    #[target_feature(enable = "avx512ifma,avx512vl")]
    unsafe fn hi4(a: [u64; 4], b: [u64; 4], c: [u64; 4]) -> [u64; 4] {
        let (pa, pb, pc) = (
            _mm256_loadu_si256(a.as_ptr().cast()),
            _mm256_loadu_si256(b.as_ptr().cast()),
            _mm256_loadu_si256(c.as_ptr().cast()),
        );
        let r = _mm256_madd52hi_epu64(pa, pb, pc);
        let mut out = [0u64; 4];
        _mm256_storeu_si256(out.as_mut_ptr().cast(), r);
        out
    }

    fn chunks<const L: usize, const C: usize>(v: &LaneVector<L>) -> [u64; C] {
        let mut out = [0u64; C];
        out.copy_from_slice(v.lanes());
        out
    }

    pub fn madd52lo<const L: usize>(
        a: LaneVector<L>,
        b: LaneVector<L>,
        c: LaneVector<L>,
    ) -> LaneVector<L> {
        match L {
            8 => {
                let r = unsafe { lo8(chunks(&a), chunks(&b), chunks(&c)) };
                LaneVector::from_fn(|k| r[k])
            }
            4 => {
                let r = unsafe { lo4(chunks(&a), chunks(&b), chunks(&c)) };
                LaneVector::from_fn(|k| r[k])
            }
            _ => unreachable!("unsupported lane count {L}"),
        }
    }

    pub fn madd52hi<const L: usize>(
        a: LaneVector<L>,
        b: LaneVector<L>,
        c: LaneVector<L>,
    ) -> LaneVector<L> {
        match L {
            8 => {
                let r = unsafe { hi8(chunks(&a), chunks(&b), chunks(&c)) };
                LaneVector::from_fn(|k| r[k])
            }
            4 => {
                let r = unsafe { hi4(chunks(&a), chunks(&b), chunks(&c)) };
                LaneVector::from_fn(|k| r[k])
            }
            _ => unreachable!("unsupported lane count {L}"),
        }
    }
}

#[cfg(not(target_arch = "x86_64"))]
mod ifma {
    use super::LaneVector;

    pub fn madd52lo<const L: usize>(
        _: LaneVector<L>,
        _: LaneVector<L>,
        _: LaneVector<L>,
    ) -> LaneVector<L> {
        unreachable!("ifma backend cannot be selected off x86-64")
    }

    pub fn madd52hi<const L: usize>(
        _: LaneVector<L>,
        _: LaneVector<L>,
        _: LaneVector<L>,
    ) -> LaneVector<L> {
        unreachable!("ifma backend cannot be selected off x86-64")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type V8 = LaneVector<8>;

    #[test]
    fn madd52lo_identity_cases() {
        let one = V8::splat(1);
        assert_eq!(V8::ZERO.madd52lo(one, one), one);
        let top = V8::splat(LIMB_MASK);
        // (2^52-1)^2 = 2^104 - 2^53 + 1: low 52 bits are 1.
        assert_eq!(V8::ZERO.madd52lo(top, top), one);
        assert_eq!(
            V8::splat(5).madd52lo(V8::splat(3), V8::splat(7)),
            V8::splat(26)
        );
    }

    #[test]
    fn madd52hi_cases() {
        let one = V8::splat(1);
        assert_eq!(V8::ZERO.madd52hi(one, one), V8::ZERO);
        let top = V8::splat(LIMB_MASK);
        assert_eq!(V8::ZERO.madd52hi(top, top), V8::splat(LIMB_MASK - 1));
        let h = V8::splat(1 << 26);
        assert_eq!(V8::splat(7).madd52hi(h, h), V8::splat(8));
    }

    #[test]
    fn madd_masks_inputs_over_52_bits() {
        // Bits above 51 of b and c are ignored by the primitive.
        let b = V8::splat((1 << 60) | 3);
        let c = V8::splat((1 << 55) | 5);
        assert_eq!(V8::ZERO.madd52lo(b, c), V8::splat(15));
    }

    #[test]
    fn lo_hi_recompose_product() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..2000 {
            let b = V8::from_fn(|_| next());
            let c = V8::from_fn(|_| next());
            let lo = V8::ZERO.madd52lo(b, c);
            let hi = V8::ZERO.madd52hi(b, c);
            for k in 0..8 {
                let want =
                    ((b.lane(k) & LIMB_MASK) as u128) * ((c.lane(k) & LIMB_MASK) as u128);
                let got = lo.lane(k) as u128 + ((hi.lane(k) as u128) << 52);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn no_wrap_below_2_63() {
        let acc = V8::splat((1 << 63) - 1);
        let top = V8::splat(LIMB_MASK);
        let r = acc.madd52lo(top, top);
        for k in 0..8 {
            assert!(r.lane(k) >= acc.lane(k)); // no wrap: result < 2^63 + 2^52
        }
    }

    #[test]
    fn plumbing_ops() {
        assert_eq!(V8::splat(1 << 52).shr(52), V8::splat(1));
        assert_eq!(
            V8::splat((1 << 53) + 3).and(V8::splat(LIMB_MASK)),
            V8::splat(3)
        );
        let a = V8::splat(11);
        let b = V8::splat(22);
        assert_eq!(V8::splat(u64::MAX).select(a, b), a);
        assert_eq!(V8::ZERO.select(a, b), b);
        assert_eq!(V8::splat(0).nonzero_flag(), V8::ZERO);
        assert_eq!(V8::splat(1 << 40).nonzero_flag(), V8::splat(1));
    }

    #[test]
    fn counters_are_deterministic() {
        use crate::trace;
        let run = || {
            trace::reset();
            let a = V8::splat(3);
            let _ = a.madd52lo(a, a).add(a).shr(5).and(a).or(a);
            (trace::counters(), trace::digest())
        };
        let (c1, d1) = run();
        let (c2, d2) = run();
        assert_eq!(c1, c2);
        assert_eq!(d1, d2);
        assert_eq!(c1.madd, 1);
        assert_eq!(c1.add_sub, 1);
        assert_eq!(c1.shift, 1);
        assert_eq!(c1.mask, 1);
        assert_eq!(c1.logic_or, 1);
    }

    #[test]
    fn backend_equivalence_when_available() {
        if !ifma_available() {
            eprintln!("avx512ifma not detected; portable-only");
            return;
        }
        let mut state = 0x1234_5678_dead_beefu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            state
        };
        for _ in 0..5000 {
            let a = V8::from_fn(|_| next());
            let b = V8::from_fn(|_| next());
            let c = V8::from_fn(|_| next());
            set_backend(Backend::Portable).unwrap();
            let (pl, ph) = (a.madd52lo(b, c), a.madd52hi(b, c));
            set_backend(Backend::Ifma).unwrap();
            let (il, ih) = (a.madd52lo(b, c), a.madd52hi(b, c));
            set_backend(Backend::Portable).unwrap();
            assert_eq!(pl, il);
            assert_eq!(ph, ih);
        }
    }
}
