//! Instruction-count audit across the size grid.
//!
//! Prints measured fused multiply-add counts for every operation against
//! the closed-form costs. Counts are per lane-vector operation (one call
//! covering all lanes counts once), so they are lane-count independent.
//!
//! Run with: `cargo run --release --example instruction_counts`

use batchmp::karatsuba::{self, KaratsubaPlan};
use batchmp::{schoolbook, trace, SlicedBatch};

fn main() {
    println!("schoolbook (per batch, counts independent of data):");
    println!(
        "{:>6} {:>4} | {:>9} {:>9} | {:>9} {:>9} | {:>10} {:>10}",
        "bits", "t52", "mul", "2*t52^2", "square", "t52(t52+1)", "trunc fma", "t52^2+2t52-1"
    );
    for bits in [260usize, 520, 1040, 2080, 4108] {
        let m = bits / 52;
        let h = SlicedBatch::<8>::zero(m);
        let f = SlicedBatch::<8>::zero(2 * m);
        trace::reset();
        let _ = schoolbook::mul(&h, &h).unwrap();
        let mul = trace::counters().madd;
        trace::reset();
        let _ = schoolbook::square(&h);
        let sq = trace::counters().madd;
        trace::reset();
        let _ = schoolbook::trunc_fma_high(&h, &h, &f).unwrap();
        let tr = trace::counters().madd;
        let m = m as u64;
        println!(
            "{bits:>6} {m:>4} | {mul:>9} {:>9} | {sq:>9} {:>10} | {tr:>10} {:>12}",
            2 * m * m,
            m * (m + 1),
            m * m + 2 * m - 1
        );
    }

    println!("\nkaratsuba:");
    println!(
        "{:>6} {:>4} | {:>9} {:>11} | {:>9} {:>15} | {:>5}",
        "bits", "t52", "mul", "(3/2)t52^2", "square", "(3/4)t52(t52+2)", "elems"
    );
    for bits in [518usize, 1038, 2078, 4154] {
        let plan = KaratsubaPlan::for_total_bits(bits).unwrap();
        let g = plan.operand_limbs();
        let z = SlicedBatch::<8>::zero(g);
        trace::reset();
        let _ = karatsuba::mul(&z, &z, &plan).unwrap();
        let mul = trace::counters().madd;
        let elems = trace::elementary_products();
        trace::reset();
        let _ = karatsuba::square(&z, &plan).unwrap();
        let sq = trace::counters().madd;
        let m = g as u64;
        println!(
            "{bits:>6} {g:>4} | {mul:>9} {:>11} | {sq:>9} {:>15} | {elems:>5}",
            3 * m * m / 2,
            3 * m * (m + 2) / 4
        );
    }
    println!("\n(the one-stage formulas are exact; the 4154-bit row recurses twice,");
    println!(" so its cost is 9 elementary 20-limb products rather than (3/2)t52^2)");
}
