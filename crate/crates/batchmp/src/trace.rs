//! Per-thread instrumentation of lane operations.
//!
//! Every lane-vector operation counts as one event regardless of the lane
//! count, so the counter totals can be compared directly against the
//! per-instruction cost formulas of the batch algorithms. Alongside the
//! counters, a running digest (and optionally a full log) of the operation
//! sequence is kept; two computations with identical digests executed the
//! same operations in the same order, which is what the constant-time
//! checks assert.
//!
//! State is thread-local: concurrent measurements on different threads do
//! not interfere.

use std::cell::{Cell, RefCell};

/// One lane-vector operation kind, as recorded in the sequence log.
///
/// For shifts, the shift amount is folded into the tag so that schedules
/// differing only in (public) shift distances still hash apart.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OpKind {
    MaddLo,
    MaddHi,
    Add,
    Sub,
    Shr(u32),
    Shl(u32),
    And,
    Or,
    EqMask,
    Select,
}

impl OpKind {
    fn tag(self) -> u64 {
        match self {
            OpKind::MaddLo => 1,
            OpKind::MaddHi => 2,
            OpKind::Add => 3,
            OpKind::Sub => 4,
            OpKind::Shr(k) => 5 | (k as u64) << 8,
            OpKind::Shl(k) => 6 | (k as u64) << 8,
            OpKind::And => 7,
            OpKind::Or => 8,
            OpKind::EqMask => 9,
            OpKind::Select => 10,
        }
    }
}

/// Counts of lane operations by category.
#[derive(Clone, Copy, Default, PartialEq, Eq, Debug)]
pub struct OpCounters {
    /// Fused multiply-add calls (both low and high halves).
    pub madd: u64,
    /// Lane shifts, either direction.
    pub shift: u64,
    /// Lane additions and subtractions.
    pub add_sub: u64,
    /// Masking operations: AND, equality masks and masked selects.
    pub mask: u64,
    /// Lane ORs.
    pub logic_or: u64,
}

impl std::fmt::Display for OpCounters {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "madd={} shift={} add_sub={} mask={} or={}",
            self.madd, self.shift, self.add_sub, self.mask, self.logic_or
        )
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct TraceState {
    counters: Cell<OpCounters>,
    digest: Cell<u64>,
    elementary: Cell<u64>,
    recording: Cell<bool>,
    log: RefCell<Vec<OpKind>>,
}

thread_local! {
    static TRACE: TraceState = TraceState {
        counters: Cell::new(OpCounters::default()),
        digest: Cell::new(FNV_OFFSET),
        elementary: Cell::new(0),
        recording: Cell::new(false),
        log: RefCell::new(Vec::new()),
    };
}

#[inline]
pub(crate) fn record(kind: OpKind) {
    TRACE.with(|t| {
        let mut c = t.counters.get();
        match kind {
            OpKind::MaddLo | OpKind::MaddHi => c.madd += 1,
            OpKind::Add | OpKind::Sub => c.add_sub += 1,
            OpKind::Shr(_) | OpKind::Shl(_) => c.shift += 1,
            OpKind::And | OpKind::EqMask | OpKind::Select => c.mask += 1,
            OpKind::Or => c.logic_or += 1,
        }
        t.counters.set(c);
        t.digest
            .set((t.digest.get() ^ kind.tag()).wrapping_mul(FNV_PRIME));
        if t.recording.get() {
            t.log.borrow_mut().push(kind);
        }
    });
}

/// Marks one elementary (base-level) multiplication or squaring.
pub(crate) fn record_elementary() {
    TRACE.with(|t| t.elementary.set(t.elementary.get() + 1));
}

/// Resets counters, digest, elementary-product count and the log.
pub fn reset() {
    TRACE.with(|t| {
        t.counters.set(OpCounters::default());
        t.digest.set(FNV_OFFSET);
        t.elementary.set(0);
        t.log.borrow_mut().clear();
    });
}

/// Counter totals since the last [`reset`] on this thread.
pub fn counters() -> OpCounters {
    TRACE.with(|t| t.counters.get())
}

/// Order-sensitive digest of the operation sequence since the last [`reset`].
pub fn digest() -> u64 {
    TRACE.with(|t| t.digest.get())
}

/// Elementary products (schoolbook multiplications/squarings) since reset.
pub fn elementary_products() -> u64 {
    TRACE.with(|t| t.elementary.get())
}

/// Enables full sequence logging (used to report divergence positions).
pub fn start_recording() {
    TRACE.with(|t| {
        t.recording.set(true);
        t.log.borrow_mut().clear();
    });
}

/// Stops logging and returns the recorded sequence.
pub fn stop_recording() -> Vec<OpKind> {
    TRACE.with(|t| {
        t.recording.set(false);
        std::mem::take(&mut *t.log.borrow_mut())
    })
}

/// Index of the first position where two operation logs differ.
pub fn first_divergence(a: &[OpKind], b: &[OpKind]) -> Option<usize> {
    if a.len() == b.len() && a == b {
        return None;
    }
    Some(a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count())
}
