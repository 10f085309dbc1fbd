//! Batch multi-precision arithmetic in lane-sliced radix 2^52.
//!
//! Eight (or four) big-integer computations advance in lockstep through a
//! word-sliced representation: limb `i` of every number in the batch lives
//! in one [`lane::LaneVector`], and every arithmetic step is a handful of
//! 52-bit fused multiply-add lane operations. On top of the batch
//! multipliers sit Montgomery modular multiplication in three shapes
//! (classic reduction, CIOS, and a truncated reduction that skips the
//! discarded low half of `q*N`) and a constant-time fixed-window modular
//! exponentiation over per-lane moduli.
//!
//! Start with [`batch::SlicedBatch::expand`] / `contract` for conversions,
//! [`schoolbook`] / [`karatsuba`] for raw products, [`montgomery`] for
//! modular arithmetic, and [`modexp::fixed_window_exp`] for the full
//! pipeline. The `examples/` directory has one runnable program per
//! capability; the `batchmp` binary drives verification, instruction-count
//! audits, constant-time trace checks, and benchmarks.

pub mod batch;
pub mod cli;
mod error;
pub mod karatsuba;
pub mod lane;
pub mod modexp;
pub mod montgomery;
pub mod sampling;
pub mod schoolbook;
pub mod trace;

pub use batch::{ExponentBatch, SlicedBatch};
pub use error::Error;
pub use lane::{Backend, LaneVector};
pub use trace::OpCounters;
