//! Command-line front end: differential verification, instruction-count
//! audits, constant-time trace checks, batch exponentiation over record
//! files, and timing measurements.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! or configuration errors. Reports are deterministic for a fixed seed
//! (timing fields excepted); the RNG is ChaCha20, named in every report
//! header.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use refnum::RefInt;

use crate::batch::{format_hex, limbs_for_bits, parse_hex, ExponentBatch, SlicedBatch};
use crate::karatsuba::{self, KaratsubaPlan};
use crate::lane::{self, Backend};
use crate::modexp::{self, ExpConfig};
use crate::montgomery::{Flavor, MontgomeryContext, MODULUS_BITS};
use crate::sampling;
use crate::schoolbook;
use crate::trace;

const SCHOOLBOOK_SIZES: [usize; 5] = [260, 520, 1040, 2080, 4108];
const KARATSUBA_SIZES: [usize; 4] = [518, 1038, 2078, 4154];

#[derive(Parser)]
#[command(
    name = "batchmp",
    about = "Batch lane-sliced multi-precision arithmetic: verification, audits and benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded differential checks against the reference oracle
    Verify(VerifyArgs),
    /// Instruction-count audit against the cost formulas
    Counts(CountsArgs),
    /// Constant-time trace invariance check for the exponentiation
    CtCheck(CtArgs),
    /// Batch modular exponentiation over a file of base:exp:mod records
    Exp(ExpArgs),
    /// Timing measurements (informational; never an acceptance gate)
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FlavorArg {
    Schoolbook,
    Karatsuba,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Flavor {
        match f {
            FlavorArg::Schoolbook => Flavor::Schoolbook,
            FlavorArg::Karatsuba => Flavor::Karatsuba,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Portable,
    Ifma,
}

#[derive(Args)]
struct VerifyArgs {
    /// Operand size in bits: a multiply size (260/520/1040/2080/4108, or
    /// 518/1038/2078/4154 for karatsuba) or a modulus size (1024/2048/4096)
    #[arg(long)]
    size: usize,
    #[arg(long, value_enum, default_value = "schoolbook")]
    flavor: FlavorArg,
    /// Use the truncated Montgomery reduction where applicable
    #[arg(long)]
    truncated: bool,
    #[arg(long, default_value_t = 8)]
    lanes: usize,
    /// Random batch instances per property
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "portable")]
    backend: BackendArg,
}

#[derive(Args)]
struct CountsArgs {
    /// Multiply size or modulus size, as for verify
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 8)]
    lanes: usize,
}

#[derive(Args)]
struct CtArgs {
    /// Modulus size: 1024, 2048 or 4096
    #[arg(long)]
    size: usize,
    /// Window width (default: best width for the size)
    #[arg(long)]
    window: Option<u32>,
    /// Shared exponent bit length (default: the modulus size)
    #[arg(long)]
    exp_bits: Option<usize>,
    #[arg(long, value_enum, default_value = "schoolbook")]
    flavor: FlavorArg,
    #[arg(long)]
    truncated: bool,
    #[arg(long, default_value_t = 8)]
    lanes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Run the intentionally leaky reference path; the check must then fail
    #[arg(long)]
    negative_control: bool,
}

#[derive(Args)]
struct ExpArgs {
    /// Modulus size: 1024, 2048 or 4096
    #[arg(long)]
    size: usize,
    /// Input file: one `base_hex:exp_hex:mod_hex` record per line, exactly
    /// `lanes` lines
    #[arg(long)]
    input: std::path::PathBuf,
    /// Output file (default: stdout), one result hex per line in lane order
    #[arg(long)]
    output: Option<std::path::PathBuf>,
    #[arg(long)]
    window: Option<u32>,
    #[arg(long, value_enum, default_value = "schoolbook")]
    flavor: FlavorArg,
    #[arg(long)]
    truncated: bool,
    #[arg(long, default_value_t = 8)]
    lanes: usize,
    /// Re-verify every lane against the oracle exponentiation
    #[arg(long)]
    check: bool,
    #[arg(long, value_enum, default_value = "portable")]
    backend: BackendArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchOp {
    Mul,
    Square,
    MontMul,
    MontSquare,
    Cios,
    Exp,
    Expand,
    Contract,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    op: BenchOp,
    /// Multiply size (mul/square/expand/contract) or modulus size
    #[arg(long)]
    size: usize,
    #[arg(long, value_enum, default_value = "schoolbook")]
    flavor: FlavorArg,
    #[arg(long)]
    truncated: bool,
    /// Also run the non-truncated counterpart and report the ratio
    #[arg(long)]
    compare: bool,
    #[arg(long, default_value_t = 8)]
    lanes: usize,
    #[arg(long)]
    window: Option<u32>,
    /// Random data sets; the reported figure is the mean over sets of the
    /// per-set minimum
    #[arg(long, default_value_t = 50)]
    datasets: u64,
    /// Timed runs per data set
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 1000)]
    warmup: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "portable")]
    backend: BackendArg,
}

/// Entry point used by the `batchmp` binary.
pub fn run() -> ExitCode {
    run_from(std::env::args())
}

/// Parses `args` and executes; separated from [`run`] for tests.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Verify(a) => with_lanes(a.lanes, |()| verify_cmd::<8>(a), |()| verify_cmd::<4>(a)),
        Command::Counts(a) => with_lanes(a.lanes, |()| counts_cmd::<8>(a), |()| counts_cmd::<4>(a)),
        Command::CtCheck(a) => with_lanes(a.lanes, |()| ct_cmd::<8>(a), |()| ct_cmd::<4>(a)),
        Command::Exp(a) => with_lanes(a.lanes, |()| exp_cmd::<8>(a), |()| exp_cmd::<4>(a)),
        Command::Bench(a) => with_lanes(a.lanes, |()| bench_cmd::<8>(a), |()| bench_cmd::<4>(a)),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn with_lanes(
    lanes: usize,
    f8: impl FnOnce(()) -> Result<bool, String>,
    f4: impl FnOnce(()) -> Result<bool, String>,
) -> Result<bool, String> {
    match lanes {
        8 => f8(()),
        4 => f4(()),
        _ => Err(format!("unsupported lane count {lanes}; use 8 or 4")),
    }
}

fn set_backend_arg(b: BackendArg) -> Result<(), String> {
    let backend = match b {
        BackendArg::Portable => Backend::Portable,
        BackendArg::Ifma => Backend::Ifma,
    };
    lane::set_backend(backend).map_err(|e| e.to_string())
}

fn flavor_name(f: Flavor) -> &'static str {
    match f {
        Flavor::Schoolbook => "schoolbook",
        Flavor::Karatsuba => "karatsuba",
    }
}

fn validate_size_flavor(size: usize, flavor: Flavor, truncated: bool) -> Result<(), String> {
    let modular = MODULUS_BITS.contains(&size);
    let ok = match flavor {
        Flavor::Schoolbook => modular || SCHOOLBOOK_SIZES.contains(&size),
        Flavor::Karatsuba => modular || KARATSUBA_SIZES.contains(&size),
    };
    if !ok {
        return Err(format!(
            "size {size} is not available for flavor {}",
            flavor_name(flavor)
        ));
    }
    if flavor == Flavor::Karatsuba && truncated && size == 1024 {
        return Err("truncated karatsuba is not provided for 1024-bit moduli".into());
    }
    Ok(())
}

fn hex_of(v: &RefInt) -> String {
    format_hex(v.words(), v.bits().max(4))
}

fn expand_refs<const L: usize>(vals: &[RefInt], bits: usize) -> SlicedBatch<L> {
    let words: Vec<Vec<u64>> = vals
        .iter()
        .map(|v| v.to_padded_words(bits.div_ceil(64)))
        .collect();
    let refs: [&[u64]; L] = std::array::from_fn(|k| words[k].as_slice());
    SlicedBatch::expand(&refs, bits).expect("generated values fit")
}

fn context_for<const L: usize>(
    moduli: &[RefInt],
    bits: usize,
    flavor: Flavor,
    truncated: bool,
) -> Result<MontgomeryContext<L>, String> {
    let words: Vec<Vec<u64>> = moduli.iter().map(|n| sampling::padded(n, bits)).collect();
    let refs: [&[u64]; L] = std::array::from_fn(|k| words[k].as_slice());
    MontgomeryContext::new(&refs, bits, flavor, truncated).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- verify

struct Report {
    lines: Vec<String>,
    failed: usize,
}

impl Report {
    fn new() -> Self {
        Report {
            lines: Vec::new(),
            failed: 0,
        }
    }

    fn pass(&mut self, what: &str) {
        self.lines.push(format!("PASS {what}"));
    }

    fn fail(&mut self, what: &str, detail: &str) {
        self.failed += 1;
        self.lines
            .push(format!("FAIL {what}\n  counterexample: {detail}"));
    }

    fn print(&self) -> bool {
        for l in &self.lines {
            println!("{l}");
        }
        let ok = self.failed == 0;
        println!(
            "{}: {} checks, {} failed",
            if ok { "ok" } else { "FAILED" },
            self.lines.len(),
            self.failed
        );
        ok
    }
}

fn verify_cmd<const L: usize>(a: &VerifyArgs) -> Result<bool, String> {
    validate_size_flavor(a.size, a.flavor.into(), a.truncated)?;
    set_backend_arg(a.backend)?;
    println!(
        "batchmp verify: size={} flavor={} truncated={} lanes={} trials={} seed={} rng=chacha20",
        a.size,
        flavor_name(a.flavor.into()),
        a.truncated,
        L,
        a.trials,
        a.seed
    );
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let mut report = Report::new();
    if MODULUS_BITS.contains(&a.size) {
        verify_modular::<L>(a, &mut rng, &mut report);
    } else {
        verify_multiply::<L>(a, &mut rng, &mut report);
    }
    Ok(report.print())
}

fn verify_multiply<const L: usize>(a: &VerifyArgs, rng: &mut ChaCha20Rng, report: &mut Report) {
    let bits = a.size;
    let karatsuba = a.flavor == FlavorArg::Karatsuba;
    let plan = karatsuba.then(|| KaratsubaPlan::for_total_bits(bits).expect("validated"));
    let mut mul_ok = true;
    let mut sq_ok = true;
    let mut cross_ok = true;
    for _ in 0..a.trials {
        let av: Vec<RefInt> = (0..L).map(|_| sampling::random_bits(rng, bits)).collect();
        let bv: Vec<RefInt> = (0..L).map(|_| sampling::random_bits(rng, bits)).collect();
        let ab = expand_refs::<L>(&av, bits);
        let bb = expand_refs::<L>(&bv, bits);
        let (p, s) = match &plan {
            Some(plan) => (
                karatsuba::mul(&ab, &bb, plan).expect("shapes"),
                karatsuba::square(&ab, plan).expect("shapes"),
            ),
            None => (
                schoolbook::mul(&ab, &bb).expect("shapes"),
                schoolbook::square(&ab),
            ),
        };
        for k in 0..L {
            if mul_ok && p.lane_value(k) != av[k].mul(&bv[k]) {
                mul_ok = false;
                report.fail(
                    &format!("mul vs oracle (size {bits})"),
                    &format!("lane {k} a={} b={}", hex_of(&av[k]), hex_of(&bv[k])),
                );
            }
            if sq_ok && s.lane_value(k) != av[k].square() {
                sq_ok = false;
                report.fail(
                    &format!("square vs oracle (size {bits})"),
                    &format!("lane {k} a={}", hex_of(&av[k])),
                );
            }
        }
        if karatsuba && cross_ok {
            let sp = schoolbook::mul(&ab, &bb).expect("shapes");
            if sp != p {
                cross_ok = false;
                report.fail(
                    &format!("karatsuba vs schoolbook (size {bits})"),
                    &format!("a={} b={}", hex_of(&av[0]), hex_of(&bv[0])),
                );
            }
        }
    }
    if a.trials == 0 {
        return;
    }
    if mul_ok {
        report.pass(&format!("mul vs oracle (size {bits}, {} trials)", a.trials));
    }
    if sq_ok {
        report.pass(&format!(
            "square vs oracle (size {bits}, {} trials)",
            a.trials
        ));
    }
    if karatsuba && cross_ok {
        report.pass(&format!(
            "karatsuba vs schoolbook (size {bits}, {} trials)",
            a.trials
        ));
    }
}

fn verify_modular<const L: usize>(a: &VerifyArgs, rng: &mut ChaCha20Rng, report: &mut Report) {
    let bits = a.size;
    let flavor: Flavor = a.flavor.into();
    let mut family_ok = true;
    let mut oracle_ok = true;
    let mut bound_ok = true;
    let mut roundtrip_ok = true;
    let mut ctx_ok = true;
    for _ in 0..a.trials {
        let ns: Vec<RefInt> = (0..L)
            .map(|_| sampling::random_odd_modulus(rng, bits))
            .collect();
        let ctx = context_for::<L>(&ns, bits, flavor, a.truncated).expect("validated");
        let m = ctx.limbs();
        let r_bits = 52 * m;
        if ctx_ok {
            for k in 0..L {
                let np_ok = ns[k]
                    .mul(&ctx.n_prime().lane_value(k))
                    .add(&RefInt::one())
                    .mod_pow2(r_bits)
                    .is_zero();
                let r2_ok =
                    ctx.r_squared().lane_value(k) == RefInt::pow2(r_bits).square().rem(&ns[k]);
                if !np_ok || !r2_ok {
                    ctx_ok = false;
                    report.fail(
                        "context constants (N*N' = -1 mod R, r2 = R^2 mod N)",
                        &format!("lane {k} n={}", hex_of(&ns[k])),
                    );
                    break;
                }
            }
        }
        let av: Vec<RefInt> = (0..L)
            .map(|k| sampling::random_below(rng, &ns[k].add(&ns[k])))
            .collect();
        let bv: Vec<RefInt> = (0..L)
            .map(|k| sampling::random_below(rng, &ns[k].add(&ns[k])))
            .collect();
        let ab = expand_refs::<L>(&av, r_bits);
        let bb = expand_refs::<L>(&bv, r_bits);
        let t = match flavor {
            Flavor::Schoolbook => schoolbook::mul(&ab, &bb).expect("shapes"),
            Flavor::Karatsuba => {
                let plan = KaratsubaPlan::for_modulus_bits(bits).expect("validated");
                let g = plan.operand_limbs();
                karatsuba::mul(&ab.resized(g), &bb.resized(g), &plan)
                    .expect("shapes")
                    .resized(2 * m)
            }
        };
        let classic = ctx.reduce(&t).expect("shapes");
        let cios = ctx.mul_cios(&ab, &bb).expect("shapes");
        let trunc_supported = !(flavor == Flavor::Karatsuba && bits == 1024);
        let trunc = trunc_supported.then(|| ctx.reduce_truncated(&t).expect("shapes"));
        if family_ok {
            let cios_eq = cios == classic;
            let trunc_eq = trunc.as_ref().map_or(true, |tr| *tr == classic);
            if !cios_eq || !trunc_eq {
                family_ok = false;
                report.fail(
                    "reduction family equality (classic / CIOS / truncated)",
                    &format!(
                        "a={} b={} n={}",
                        hex_of(&av[0]),
                        hex_of(&bv[0]),
                        hex_of(&ns[0])
                    ),
                );
            }
        }
        for k in 0..L {
            if oracle_ok {
                let np = refnum::neg_inverse_mod_pow2(&ns[k], r_bits);
                let want = refnum::montred(&av[k].mul(&bv[k]), &ns[k], &np, r_bits);
                if classic.lane_value(k) != want {
                    oracle_ok = false;
                    report.fail(
                        "montgomery reduction vs oracle",
                        &format!(
                            "lane {k} a={} b={} n={}",
                            hex_of(&av[k]),
                            hex_of(&bv[k]),
                            hex_of(&ns[k])
                        ),
                    );
                }
            }
            if bound_ok
                && classic.lane_value(k).cmp_ref(&ns[k].add(&ns[k])) != std::cmp::Ordering::Less
            {
                bound_ok = false;
                report.fail("reduction output bound (< 2N)", &format!("lane {k}"));
            }
        }
        if roundtrip_ok {
            let xv: Vec<RefInt> = (0..L).map(|k| sampling::random_below(rng, &ns[k])).collect();
            let x = expand_refs::<L>(&xv, r_bits);
            let back = ctx
                .from_mont(&ctx.to_mont(&x).expect("shapes"))
                .expect("shapes");
            for k in 0..L {
                if back.lane_value(k) != xv[k] {
                    roundtrip_ok = false;
                    report.fail(
                        "from_mont(to_mont(x)) = x",
                        &format!("lane {k} x={} n={}", hex_of(&xv[k]), hex_of(&ns[k])),
                    );
                    break;
                }
            }
        }
    }
    if a.trials == 0 {
        return;
    }
    let n = a.trials * L as u64;
    if ctx_ok {
        report.pass(&format!("context constants ({} batches)", a.trials));
    }
    if family_ok {
        report.pass(&format!("reduction family equality ({n} lane trials)"));
    }
    if oracle_ok {
        report.pass(&format!("montgomery reduction vs oracle ({n} lane trials)"));
    }
    if bound_ok {
        report.pass("reduction output bound (< 2N)");
    }
    if roundtrip_ok {
        report.pass("from_mont(to_mont(x)) = x");
    }
}

// ---------------------------------------------------------------- counts

fn counts_cmd<const L: usize>(a: &CountsArgs) -> Result<bool, String> {
    let known = MODULUS_BITS.contains(&a.size)
        || SCHOOLBOOK_SIZES.contains(&a.size)
        || KARATSUBA_SIZES.contains(&a.size);
    if !known {
        return Err(format!("size {} is not on any supported grid", a.size));
    }
    let t52 = limbs_for_bits(a.size);
    println!("batchmp counts: size={} t52={} lanes={}", a.size, t52, L);
    let m = t52 as u64;
    let mut all_ok = true;

    // Counter traces are data-independent, so zero inputs measure the same
    // instruction counts as live data.
    let zero_h = SlicedBatch::<L>::zero(t52);
    let zero_f = SlicedBatch::<L>::zero(2 * t52);

    let audit = |name: &str, measured: u64, formula: u64, tol: u64, ok_acc: &mut bool| {
        let ok = measured.abs_diff(formula) <= tol;
        *ok_acc &= ok;
        println!(
            "{name}: measured {measured}, formula {formula}{} -> {}",
            if tol == 0 {
                String::new()
            } else {
                format!(" (tolerance +-{tol})")
            },
            if ok { "PASS" } else { "FAIL" }
        );
    };

    trace::reset();
    let _ = schoolbook::mul(&zero_h, &zero_h).expect("shapes");
    let c = trace::counters();
    audit("mul madd", c.madd, 2 * m * m, 0, &mut all_ok);
    audit("mul shifts", c.shift, 2 * m - 2, 2, &mut all_ok);
    audit("mul adds", c.add_sub, 2 * m - 2, 2, &mut all_ok);
    audit("mul masks", c.mask, 2 * m - 2, 2, &mut all_ok);

    trace::reset();
    let _ = schoolbook::square(&zero_h);
    audit(
        "square madd",
        trace::counters().madd,
        m * (m + 1),
        0,
        &mut all_ok,
    );

    trace::reset();
    let _ = schoolbook::fma(&zero_h, &zero_h, &zero_f).expect("shapes");
    let full_fma = trace::counters().madd;
    audit("fma madd", full_fma, 2 * m * m, 0, &mut all_ok);

    trace::reset();
    let _ = schoolbook::trunc_fma_high(&zero_h, &zero_h, &zero_f).expect("shapes");
    let c = trace::counters();
    audit(
        "truncated fma madd",
        c.madd,
        m * m + 3 * m / 2 - 1,
        m,
        &mut all_ok,
    );
    audit("truncated fma or", c.logic_or, m - 1, 2, &mut all_ok);
    let ratio_ok = (c.madd as f64) < 0.55 * full_fma as f64;
    all_ok &= ratio_ok;
    println!(
        "truncated fma madd below 0.55 * fma madd: {} < {:.0} -> {}",
        c.madd,
        0.55 * full_fma as f64,
        if ratio_ok { "PASS" } else { "FAIL" }
    );

    // One-stage Karatsuba audit at the paired split size.
    let k_bits = match a.size {
        518 | 1038 | 2078 => Some(a.size),
        520 => Some(518),
        1040 | 1024 => Some(1038),
        2080 | 2048 => Some(2078),
        _ => None,
    };
    if let Some(kb) = k_bits {
        let plan = KaratsubaPlan::for_total_bits(kb).expect("one-stage size");
        let kt52 = plan.operand_limbs() as u64;
        let zk = SlicedBatch::<L>::zero(plan.operand_limbs());
        for (name, measured, formula) in [
            (
                "karatsuba mul madd",
                {
                    trace::reset();
                    let _ = karatsuba::mul(&zk, &zk, &plan).expect("shapes");
                    trace::counters().madd
                },
                3 * kt52 * kt52 / 2,
            ),
            (
                "karatsuba square madd",
                {
                    trace::reset();
                    let _ = karatsuba::square(&zk, &plan).expect("shapes");
                    trace::counters().madd
                },
                3 * kt52 * (kt52 + 2) / 4,
            ),
        ] {
            let ok = (measured as f64 - formula as f64).abs() <= 0.2 * formula as f64;
            all_ok &= ok;
            println!(
                "{name} (size {kb}): measured {measured}, formula {formula} (tolerance 20%) -> {}",
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    if a.size == 4154 || a.size == 4096 || a.size == 4108 {
        trace::reset();
        let zk = SlicedBatch::<L>::zero(80);
        let _ = karatsuba::mul_double(&zk, &zk).expect("shapes");
        let elems = trace::elementary_products();
        let ok = elems == 9;
        all_ok &= ok;
        println!(
            "double karatsuba elementary products: measured {elems}, expected 9 -> {}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(all_ok)
}

// --------------------------------------------------------------- ct-check

fn ct_cmd<const L: usize>(a: &CtArgs) -> Result<bool, String> {
    if !MODULUS_BITS.contains(&a.size) {
        return Err(format!("size {} is not a modulus size", a.size));
    }
    validate_size_flavor(a.size, a.flavor.into(), a.truncated)?;
    let window = match a.window {
        Some(w) => ExpConfig::new(w).map_err(|e| e.to_string())?,
        None => ExpConfig::default_for_bits(a.size),
    };
    let s = a.exp_bits.unwrap_or(a.size);
    if s == 0 {
        return Err("exponent bit length must be at least 1".into());
    }
    println!(
        "batchmp ct-check: size={} window={} exp_bits={} flavor={} truncated={} lanes={} seed={} negative_control={}",
        a.size,
        window.window(),
        s,
        flavor_name(a.flavor.into()),
        a.truncated,
        L,
        a.seed,
        a.negative_control
    );

    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let ns: Vec<RefInt> = (0..L)
        .map(|_| sampling::random_odd_modulus(&mut rng, a.size))
        .collect();
    let ctx = context_for::<L>(&ns, a.size, a.flavor.into(), a.truncated)?;
    let bases: Vec<RefInt> = (0..L)
        .map(|k| sampling::random_below(&mut rng, &ns[k]))
        .collect();
    let base_batch = expand_refs::<L>(&bases, 52 * ctx.limbs());

    // Adversarial pair: all-zero windows vs all-one bits, equal length.
    let zeros = vec![0u64; s.div_ceil(64)];
    let mut ones = vec![u64::MAX; s.div_ceil(64)];
    let extra = 64 * ones.len() - s;
    *ones.last_mut().unwrap() >>= extra;
    let z_refs: [&[u64]; L] = std::array::from_fn(|_| zeros.as_slice());
    let o_refs: [&[u64]; L] = std::array::from_fn(|_| ones.as_slice());
    let e_zero = ExponentBatch::expand64(&z_refs, s).expect("fits");
    let e_ones = ExponentBatch::expand64(&o_refs, s).expect("fits");

    let run = |e: &ExponentBatch<L>| {
        trace::reset();
        trace::start_recording();
        let _ = modexp::exp_sliced(&base_batch, e, &ctx, &window, a.negative_control)
            .expect("validated configuration");
        (trace::counters(), trace::digest(), trace::stop_recording())
    };
    let (c0, d0, log0) = run(&e_zero);
    let (c1, d1, log1) = run(&e_ones);
    let identical = c0 == c1 && d0 == d1 && log0 == log1;
    println!("counters A: {c0}");
    println!("counters B: {c1}");
    println!("sequence digests: {d0:016x} vs {d1:016x}");
    if identical {
        println!("traces identical -> PASS");
    } else {
        match trace::first_divergence(&log0, &log1) {
            Some(i) => println!("traces diverge at operation index {i} -> FAIL"),
            None => println!("traces diverge (counters) -> FAIL"),
        }
    }
    Ok(identical)
}

// -------------------------------------------------------------------- exp

fn exp_cmd<const L: usize>(a: &ExpArgs) -> Result<bool, String> {
    if !MODULUS_BITS.contains(&a.size) {
        return Err(format!("size {} is not a modulus size", a.size));
    }
    validate_size_flavor(a.size, a.flavor.into(), a.truncated)?;
    set_backend_arg(a.backend)?;
    let window = match a.window {
        Some(w) => ExpConfig::new(w).map_err(|e| e.to_string())?,
        None => ExpConfig::default_for_bits(a.size),
    };
    let content = std::fs::read_to_string(&a.input)
        .map_err(|e| format!("cannot read {}: {e}", a.input.display()))?;
    let records: Vec<&str> = content.lines().filter(|l| !l.trim().is_empty()).collect();
    if records.len() != L {
        return Err(format!(
            "expected exactly {L} records in {}, found {}",
            a.input.display(),
            records.len()
        ));
    }
    let mut bases = Vec::new();
    let mut exps = Vec::new();
    let mut mods = Vec::new();
    for (k, line) in records.iter().enumerate() {
        let parts: Vec<&str> = line.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("record {k}: expected base:exp:mod"));
        }
        let base = parse_hex(parts[0]).map_err(|e| format!("record {k}: {e}"))?;
        let exp = parse_hex(parts[1]).map_err(|e| format!("record {k}: {e}"))?;
        let m = parse_hex(parts[2]).map_err(|e| format!("record {k}: {e}"))?;
        let mv = RefInt::from_words(&m);
        if !mv.is_odd() {
            return Err(format!("record {k}: even modulus"));
        }
        if mv.bits() > a.size {
            return Err(format!("record {k}: modulus exceeds {} bits", a.size));
        }
        let bv = RefInt::from_words(&base);
        if bv.cmp_ref(&mv) != std::cmp::Ordering::Less {
            return Err(format!("record {k}: base must be below the modulus"));
        }
        bases.push(bv);
        exps.push(RefInt::from_words(&exp));
        mods.push(mv);
    }
    let s = exps.iter().map(|e| e.bits()).max().unwrap().max(1);
    let ctx = context_for::<L>(&mods, a.size, a.flavor.into(), a.truncated)?;
    let bw: Vec<Vec<u64>> = bases.iter().map(|b| sampling::padded(b, a.size)).collect();
    let brefs: [&[u64]; L] = std::array::from_fn(|k| bw[k].as_slice());
    let ew: Vec<Vec<u64>> = exps
        .iter()
        .map(|e| e.to_padded_words(s.div_ceil(64)))
        .collect();
    let erefs: [&[u64]; L] = std::array::from_fn(|k| ew[k].as_slice());
    let out =
        modexp::fixed_window_exp(&brefs, &erefs, s, &ctx, &window).map_err(|e| e.to_string())?;

    let mut text = String::new();
    for words in &out {
        let _ = writeln!(text, "{}", format_hex(words, a.size));
    }
    match &a.output {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    if a.check {
        for k in 0..L {
            let want = refnum::modexp(&bases[k], &exps[k], &mods[k]);
            if RefInt::from_words(&out[k]) != want {
                println!("lane {k}: MISMATCH vs oracle");
                return Ok(false);
            }
        }
        println!("oracle cross-check: all {L} lanes match");
    }
    Ok(true)
}

// ------------------------------------------------------------------ bench

fn bench_cmd<const L: usize>(a: &BenchArgs) -> Result<bool, String> {
    set_backend_arg(a.backend)?;
    let truncs: Vec<bool> = if a.compare {
        vec![false, true]
    } else {
        vec![a.truncated]
    };
    let mut per_op_ns = Vec::new();
    for &trunc in &truncs {
        let label = bench_label(a.op, trunc);
        let ns = run_bench::<L>(a, trunc)?;
        println!(
            "{label}: size={} lanes={L} datasets={} runs={} -> {:.0} ns/op ({:.1} ns/value)",
            a.size,
            a.datasets,
            a.runs,
            ns,
            ns / L as f64
        );
        per_op_ns.push(ns);
    }
    if per_op_ns.len() == 2 {
        println!(
            "truncated/classic ratio: {:.3}",
            per_op_ns[1] / per_op_ns[0]
        );
    }
    Ok(true)
}

fn bench_label(op: BenchOp, truncated: bool) -> String {
    let base = match op {
        BenchOp::Mul => "mul",
        BenchOp::Square => "square",
        BenchOp::MontMul => "mont-mul",
        BenchOp::MontSquare => "mont-square",
        BenchOp::Cios => "cios",
        BenchOp::Exp => "exp",
        BenchOp::Expand => "expand",
        BenchOp::Contract => "contract",
    };
    if truncated && matches!(op, BenchOp::MontMul | BenchOp::MontSquare | BenchOp::Exp) {
        format!("{base} (truncated)")
    } else {
        base.to_string()
    }
}

// Measurement protocol: per data set, take the minimum over `runs` timed
// executions; report the mean of the per-set minimums.
fn run_bench<const L: usize>(a: &BenchArgs, truncated: bool) -> Result<f64, String> {
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let modular = matches!(
        a.op,
        BenchOp::MontMul | BenchOp::MontSquare | BenchOp::Cios | BenchOp::Exp
    );
    if modular && !MODULUS_BITS.contains(&a.size) {
        return Err(format!("op requires a modulus size, got {}", a.size));
    }
    validate_size_flavor(a.size, a.flavor.into(), truncated && modular)?;
    let mut mins = Vec::new();
    for _ in 0..a.datasets.max(1) {
        let mut best = f64::INFINITY;
        if modular {
            let bits = a.size;
            let ns: Vec<RefInt> = (0..L)
                .map(|_| sampling::random_odd_modulus(&mut rng, bits))
                .collect();
            let ctx = context_for::<L>(&ns, bits, a.flavor.into(), truncated)?;
            let xv: Vec<RefInt> = (0..L)
                .map(|k| sampling::random_below(&mut rng, &ns[k]))
                .collect();
            let yv: Vec<RefInt> = (0..L)
                .map(|k| sampling::random_below(&mut rng, &ns[k]))
                .collect();
            let x = expand_refs::<L>(&xv, 52 * ctx.limbs());
            let y = expand_refs::<L>(&yv, 52 * ctx.limbs());
            let e = {
                let ev: Vec<RefInt> = (0..L)
                    .map(|_| sampling::random_bits(&mut rng, bits))
                    .collect();
                let words: Vec<Vec<u64>> = ev
                    .iter()
                    .map(|v| v.to_padded_words(bits.div_ceil(64)))
                    .collect();
                let refs: [&[u64]; L] = std::array::from_fn(|k| words[k].as_slice());
                ExponentBatch::expand64(&refs, bits).expect("fits")
            };
            let window = match a.window {
                Some(w) => ExpConfig::new(w).map_err(|e| e.to_string())?,
                None => ExpConfig::default_for_bits(bits),
            };
            run_timed(a, &mut best, || match a.op {
                BenchOp::MontMul => {
                    let _ = ctx.mul(&x, &y).expect("shapes");
                }
                BenchOp::MontSquare => {
                    let _ = ctx.square(&x).expect("shapes");
                }
                BenchOp::Cios => {
                    let _ = ctx.mul_cios(&x, &y).expect("shapes");
                }
                BenchOp::Exp => {
                    let _ = modexp::exp_sliced(&x, &e, &ctx, &window, false).expect("shapes");
                }
                _ => unreachable!(),
            });
        } else {
            let bits = a.size;
            let av: Vec<RefInt> = (0..L)
                .map(|_| sampling::random_bits(&mut rng, bits))
                .collect();
            let bv: Vec<RefInt> = (0..L)
                .map(|_| sampling::random_bits(&mut rng, bits))
                .collect();
            let ab = expand_refs::<L>(&av, bits);
            let bb = expand_refs::<L>(&bv, bits);
            let plan = (a.flavor == FlavorArg::Karatsuba)
                .then(|| KaratsubaPlan::for_total_bits(bits))
                .transpose()
                .map_err(|e| e.to_string())?;
            let words: Vec<Vec<u64>> = av
                .iter()
                .map(|v| v.to_padded_words(bits.div_ceil(64)))
                .collect();
            run_timed(a, &mut best, || match a.op {
                BenchOp::Mul => match &plan {
                    Some(p) => {
                        let _ = karatsuba::mul(&ab, &bb, p).expect("shapes");
                    }
                    None => {
                        let _ = schoolbook::mul(&ab, &bb).expect("shapes");
                    }
                },
                BenchOp::Square => match &plan {
                    Some(p) => {
                        let _ = karatsuba::square(&ab, p).expect("shapes");
                    }
                    None => {
                        let _ = schoolbook::square(&ab);
                    }
                },
                BenchOp::Expand => {
                    let refs: [&[u64]; L] = std::array::from_fn(|k| words[k].as_slice());
                    let _ = SlicedBatch::<L>::expand(&refs, bits).expect("fits");
                }
                BenchOp::Contract => {
                    let _ = ab.contract();
                }
                _ => unreachable!(),
            });
        }
        mins.push(best);
    }
    Ok(mins.iter().sum::<f64>() / mins.len() as f64)
}

fn run_timed<F: FnMut()>(a: &BenchArgs, best: &mut f64, mut f: F) {
    for _ in 0..a.warmup.min(200) {
        f();
    }
    for _ in 0..a.runs.max(1) {
        let t0 = Instant::now();
        f();
        let dt = t0.elapsed().as_nanos() as f64;
        if dt < *best {
            *best = dt;
        }
    }
}
