//! divisum: correlation sums of divisor functions, their predicted
//! constants, and consistency checks, from the command line.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divisum::arith::{factorize, vp, ArithError, DivisorParams};
use divisum::constants::{
    c_factor_direct, iterated_log_integral, nabla_constant, psi_factor_odd, psi_factor_two,
    ConstError, EulerFactorValue, NablaResult, TruncationBudget,
};
use divisum::empirical::{
    additive_check, ingham_check, lcm_series_sum, ratio_table, shifted_convolution_sum, EmpError,
    RatioRow,
};
use divisum::expectations::{exp_triple_empirical, ExpError};
use divisum::sieve::{dk_range, read_dktb, write_dktb, SieveConfig, SieveError};
use num::{BigRational, Signed};

#[derive(Parser)]
#[command(
    name = "divisum",
    version,
    about = "Triple and pair correlation sums of divisor functions",
    long_about = "Evaluates sums of d_k(n+h) d_l(n) d_m(n-h), the singular constant \
predicted for their growth, local expectation checks, and supporting sieves.\n\
Sums run over h < n <= x so that every factor is defined; the omitted n <= h \
contribute O(h x^eps) and do not affect the reported asymptotics."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads (default: all available)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the singular constant with rigorous truncation error (JSON)
    Constant(ConstantArgs),
    /// Convergence table of the triple sum against its predicted main term
    Triple(TripleArgs),
    /// Pair sum d_k(n+h) d_l(n), with the proven asymptotic when k = l = 2
    Shifted(ShiftedArgs),
    /// Additive divisor sum d(n) d(N-n) against its proven asymptotic
    Additive(AdditiveArgs),
    /// Truncated reciprocal-lcm series over congruence-compatible triples, exact
    LcmSeries(LcmSeriesArgs),
    /// Local expectation estimates: exact empirical average vs closed form
    Expectations(ExpectationsArgs),
    /// Internal consistency suites; nonzero exit on any deviation
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
    /// Build or reuse cached divisor tables in the DKTB format
    SieveCache(SieveCacheArgs),
}

#[derive(Args)]
struct BudgetArgs {
    /// Largest prime in the Euler product
    #[arg(long, value_parser = parse_magnitude)]
    prime_cutoff: Option<u64>,
    /// Largest exponent in special-prime triple sums
    #[arg(long)]
    exp_cutoff: Option<u32>,
    /// Number of terms kept in expectation series
    #[arg(long)]
    series_cutoff: Option<u32>,
    /// Target absolute error of the assembled constant
    #[arg(long)]
    tol: Option<f64>,
}

impl BudgetArgs {
    fn resolve(&self, params: &DivisorParams) -> TruncationBudget {
        let mut b = TruncationBudget::default_for(params);
        if let Some(p) = self.prime_cutoff {
            b.prime_cutoff = p;
        }
        if let Some(v) = self.exp_cutoff {
            b.exponent_cutoff = v;
        }
        if let Some(i) = self.series_cutoff {
            b.series_cutoff = i;
        }
        if let Some(t) = self.tol {
            b.target_abs_tol = t;
        }
        b
    }
}

#[derive(Args)]
struct ParamArgs {
    /// Shift h >= 1
    #[arg(long)]
    h: u64,
    /// Order of the first divisor function
    #[arg(long)]
    k: u32,
    /// Order of the second divisor function
    #[arg(long)]
    l: u32,
    /// Order of the third divisor function
    #[arg(long)]
    m: u32,
}

impl ParamArgs {
    fn build(&self) -> Result<DivisorParams, Failure> {
        Ok(DivisorParams::new(self.k, self.l, self.m, self.h)?)
    }
}

#[derive(Args)]
struct ConstantArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct TripleArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Comma-separated ascending x values, e.g. 1e4,1e5,1e6
    #[arg(long, value_delimiter = ',', value_parser = parse_magnitude, required = true)]
    x_grid: Vec<u64>,
    /// Compare against the proven lower-bound main term instead
    #[arg(long)]
    lower_bound: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct ShiftedArgs {
    #[arg(long)]
    h: u64,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    l: u32,
    #[arg(long, value_parser = parse_magnitude)]
    x: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct AdditiveArgs {
    /// The fixed total N; sums d(n) d(N-n) over 0 < n < N
    #[arg(long, value_parser = parse_magnitude)]
    x: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct LcmSeriesArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Upper limit of all three series indices (at most 500)
    #[arg(long, value_parser = parse_magnitude)]
    x: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ExpectationsArgs {
    /// Comma-separated primes
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<u64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Range endpoint of the exact empirical average (at least 1e4)
    #[arg(long, value_parser = parse_magnitude)]
    x: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum VerifySuite {
    /// Direct congruence-sum factors against expectation-series factors at
    /// every special prime
    CPsi(CPsiArgs),
    /// Exact empirical expectation averages against closed forms
    Expectations(VerifyExpectationsArgs),
    /// Iterated log integral against its closed form
    Integral(IntegralArgs),
}

#[derive(Args)]
struct CPsiArgs {
    /// Check all shifts up to this bound
    #[arg(long, default_value_t = 64)]
    h_max: u64,
    /// Check all divisor orders from 2 up to this bound
    #[arg(long, default_value_t = 4)]
    kl_max: u32,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct VerifyExpectationsArgs {
    /// Comma-separated primes
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<u64>,
    /// Range endpoint of the exact empirical averages
    #[arg(long, value_parser = parse_magnitude)]
    x: u64,
    /// Acceptance threshold on every relative error
    #[arg(long, default_value_t = 2e-2)]
    tol: f64,
}

#[derive(Args)]
struct IntegralArgs {
    /// Iteration depth (0..=6)
    #[arg(long)]
    r: u32,
    /// Upper integration limit
    #[arg(long)]
    x: f64,
    /// Acceptance threshold on the absolute deviation
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct SieveCacheArgs {
    /// Divisor order of the table
    #[arg(long)]
    k: u32,
    /// Table covers 1..=x
    #[arg(long, value_parser = parse_magnitude)]
    x: u64,
    /// Directory holding .dktb files
    #[arg(long)]
    cache_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn verification(message: String) -> Self {
        Failure { code: 1, message }
    }
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
    fn resource(message: String) -> Self {
        Failure { code: 3, message }
    }
}

impl From<ArithError> for Failure {
    fn from(e: ArithError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<ConstError> for Failure {
    fn from(e: ConstError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<ExpError> for Failure {
    fn from(e: ExpError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<SieveError> for Failure {
    fn from(e: SieveError) -> Self {
        match e {
            SieveError::Alloc { .. } | SieveError::Io(_) => Failure::resource(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<EmpError> for Failure {
    fn from(e: EmpError) -> Self {
        match e {
            EmpError::Sieve(inner) => inner.into(),
            _ => Failure::usage(e.to_string()),
        }
    }
}

/// Accepts plain integers and whole-valued scientific notation like 1e7.
fn parse_magnitude(s: &str) -> Result<u64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = t.parse().map_err(|_| format!("not a number: {t}"))?;
    if !f.is_finite() || f < 0.0 || f.fract() != 0.0 || f > 9.0e15 {
        return Err(format!("not a whole nonnegative number: {t}"));
    }
    Ok(f as u64)
}

/// 15 significant digits, scientific; the fixed width keeps every run of
/// the same config byte-identical.
fn sci(x: f64) -> String {
    format!("{x:.14e}")
}

fn rational_digits(r: &BigRational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // a later duplicate build_global is harmless, the first pool wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut output = String::new();
    let result = dispatch(&cli.cmd, &mut output);
    if !output.is_empty() {
        if let Some(path) = &cli.out {
            if let Err(e) = std::fs::write(path, &output) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        } else {
            print!("{output}");
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: &Cmd, out: &mut String) -> Result<(), Failure> {
    match cmd {
        Cmd::Constant(a) => cmd_constant(a, out),
        Cmd::Triple(a) => cmd_triple(a, out),
        Cmd::Shifted(a) => cmd_shifted(a, out),
        Cmd::Additive(a) => cmd_additive(a, out),
        Cmd::LcmSeries(a) => cmd_lcm_series(a, out),
        Cmd::Expectations(a) => cmd_expectations(a, out),
        Cmd::Verify { suite } => match suite {
            VerifySuite::CPsi(a) => cmd_verify_cpsi(a, out),
            VerifySuite::Expectations(a) => cmd_verify_expectations(a, out),
            VerifySuite::Integral(a) => cmd_verify_integral(a, out),
        },
        Cmd::SieveCache(a) => cmd_sieve_cache(a, out),
    }
}

fn nabla_json(n: &NablaResult) -> String {
    let mut s = String::new();
    let p = &n.params;
    write!(
        s,
        "{{\"h\":{},\"k\":{},\"l\":{},\"m\":{},\"nabla\":{},\"error_bound\":{},\"prime_cutoff\":{},\"factors\":[",
        p.h,
        p.k,
        p.l,
        p.m,
        sci(n.nabla),
        sci(n.abs_error_bound),
        n.budget.prime_cutoff
    )
    .unwrap();
    for (i, f) in n.per_prime_log.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let (num, den) = rational_digits(&f.value);
        write!(
            s,
            "{{\"p\":{},\"value_num\":\"{}\",\"value_den\":\"{}\",\"tail\":{}}}",
            f.p,
            num,
            den,
            sci(f.tail_bound)
        )
        .unwrap();
    }
    s.push_str("]}\n");
    s
}

fn cmd_constant(a: &ConstantArgs, out: &mut String) -> Result<(), Failure> {
    let params = a.params.build()?;
    let budget = a.budget.resolve(&params);
    let nabla = nabla_constant(&params, &budget)?;
    out.push_str(&nabla_json(&nabla));
    Ok(())
}

fn ratio_rows_csv(rows: &[RatioRow], out: &mut String) {
    out.push_str("x,h,k,l,m,sum,main_term,ratio\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.x,
            r.h,
            r.k,
            r.l,
            r.m,
            r.sum,
            sci(r.main_term),
            sci(r.ratio)
        )
        .unwrap();
    }
}

fn ratio_rows_json(rows: &[RatioRow], out: &mut String) {
    out.push('[');
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(
            out,
            "{{\"x\":{},\"h\":{},\"k\":{},\"l\":{},\"m\":{},\"sum\":\"{}\",\"main_term\":{},\"ratio\":{}}}",
            r.x,
            r.h,
            r.k,
            r.l,
            r.m,
            r.sum,
            sci(r.main_term),
            sci(r.ratio)
        )
        .unwrap();
    }
    out.push_str("]\n");
}

fn cmd_triple(a: &TripleArgs, out: &mut String) -> Result<(), Failure> {
    let params = a.params.build()?;
    match a.x_grid.last() {
        Some(&top) if top > params.h => {}
        _ => return Err(Failure::usage("x grid must end above h")),
    }
    let budget = a.budget.resolve(&params);
    let nabla = nabla_constant(&params, &budget)?;
    let rows = ratio_table(&params, &a.x_grid, &nabla, a.lower_bound)?;
    match a.format {
        Format::Csv => ratio_rows_csv(&rows, out),
        Format::Json => ratio_rows_json(&rows, out),
    }
    Ok(())
}

fn cmd_shifted(a: &ShiftedArgs, out: &mut String) -> Result<(), Failure> {
    let (sum, main) = if a.k == 2 && a.l == 2 && a.x >= 10 {
        let chk = ingham_check(a.h, a.x)?;
        (chk.sum, Some((chk.main_term, chk.ratio)))
    } else {
        (shifted_convolution_sum(a.k, a.l, a.h, a.x)?, None)
    };
    let (main_s, ratio_s) = match main {
        Some((m, r)) => (sci(m), sci(r)),
        None => (String::new(), String::new()),
    };
    match a.format {
        Format::Csv => {
            out.push_str("x,h,k,l,sum,main_term,ratio\n");
            writeln!(out, "{},{},{},{},{},{},{}", a.x, a.h, a.k, a.l, sum, main_s, ratio_s)
                .unwrap();
        }
        Format::Json => {
            let (mj, rj) = match main {
                Some((m, r)) => (sci(m), sci(r)),
                None => ("null".into(), "null".into()),
            };
            writeln!(
                out,
                "{{\"x\":{},\"h\":{},\"k\":{},\"l\":{},\"sum\":\"{}\",\"main_term\":{},\"ratio\":{}}}",
                a.x, a.h, a.k, a.l, sum, mj, rj
            )
            .unwrap();
        }
    }
    Ok(())
}

fn cmd_additive(a: &AdditiveArgs, out: &mut String) -> Result<(), Failure> {
    let chk = additive_check(a.x)?;
    match a.format {
        Format::Csv => {
            out.push_str("n,sum,main_term,ratio\n");
            writeln!(out, "{},{},{},{}", a.x, chk.sum, sci(chk.main_term), sci(chk.ratio))
                .unwrap();
        }
        Format::Json => {
            writeln!(
                out,
                "{{\"n\":{},\"sum\":\"{}\",\"main_term\":{},\"ratio\":{}}}",
                a.x,
                chk.sum,
                sci(chk.main_term),
                sci(chk.ratio)
            )
            .unwrap();
        }
    }
    Ok(())
}

fn cmd_lcm_series(a: &LcmSeriesArgs, out: &mut String) -> Result<(), Failure> {
    let p = &a.params;
    let value = lcm_series_sum(p.k, p.l, p.m, p.h, a.x)?;
    let (num, den) = rational_digits(&value);
    match a.format {
        Format::Csv => {
            out.push_str("h,k,l,m,x,numerator,denominator\n");
            writeln!(out, "{},{},{},{},{},{},{}", p.h, p.k, p.l, p.m, a.x, num, den).unwrap();
        }
        Format::Json => {
            writeln!(
                out,
                "{{\"h\":{},\"k\":{},\"l\":{},\"m\":{},\"x\":{},\"numerator\":\"{}\",\"denominator\":\"{}\"}}",
                p.h, p.k, p.l, p.m, a.x, num, den
            )
            .unwrap();
        }
    }
    Ok(())
}

const ESTIMATE_HEADER: &str = "p,h,k,l,m,x,empirical,closed_form,rel_error\n";

fn cmd_expectations(a: &ExpectationsArgs, out: &mut String) -> Result<(), Failure> {
    let params = a.params.build()?;
    match a.format {
        Format::Csv => {
            out.push_str(ESTIMATE_HEADER);
            for &p in &a.p {
                let est = exp_triple_empirical(p, &params, a.x)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    p,
                    params.h,
                    params.k,
                    params.l,
                    params.m,
                    est.x,
                    sci(est.value),
                    sci(est.closed_form),
                    sci(est.rel_error)
                )
                .unwrap();
            }
        }
        Format::Json => {
            out.push('[');
            for (i, &p) in a.p.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let est = exp_triple_empirical(p, &params, a.x)?;
                write!(
                    out,
                    "{{\"p\":{},\"h\":{},\"k\":{},\"l\":{},\"m\":{},\"x\":{},\"empirical\":{},\"closed_form\":{},\"rel_error\":{}}}",
                    p,
                    params.h,
                    params.k,
                    params.l,
                    params.m,
                    est.x,
                    sci(est.value),
                    sci(est.closed_form),
                    sci(est.rel_error)
                )
                .unwrap();
            }
            out.push_str("]\n");
        }
    }
    Ok(())
}

fn special_factor_pair(
    p: u64,
    h: u64,
    k: u32,
    l: u32,
    m: u32,
    budget: &BudgetArgs,
) -> Result<(EulerFactorValue, EulerFactorValue), Failure> {
    let params = DivisorParams::new(k, l, m, h)?;
    let b = budget.resolve(&params);
    let c = c_factor_direct(p, h, k, l, m, b.exponent_cutoff)?;
    let alpha = vp(p, h);
    let psi = if p == 2 {
        psi_factor_two(alpha, k, l, m, b.series_cutoff)?
    } else {
        psi_factor_odd(p, alpha, k, l, m, b.series_cutoff)?
    };
    Ok((c, psi))
}

fn cmd_verify_cpsi(a: &CPsiArgs, out: &mut String) -> Result<(), Failure> {
    if a.kl_max < 2 || a.kl_max > 6 {
        return Err(Failure::usage("--kl-max must be in 2..=6"));
    }
    if a.h_max < 1 {
        return Err(Failure::usage("--h-max must be at least 1"));
    }
    let mut memo: std::collections::HashMap<(u64, u32, u32, u32, u32), (EulerFactorValue, EulerFactorValue)> =
        std::collections::HashMap::new();
    let mut pairs = 0u64;
    let mut max_tail = 0.0f64;
    for h in 1..=a.h_max {
        let f2h = factorize(2 * h)?;
        for &(p, _) in &f2h.factors {
            let alpha = vp(p, h);
            for k in 2..=a.kl_max {
                for l in 2..=a.kl_max {
                    for m in 2..=a.kl_max {
                        let key = (p, alpha, k, l, m);
                        if !memo.contains_key(&key) {
                            memo.insert(key, special_factor_pair(p, h, k, l, m, &a.budget)?);
                        }
                        let (c, psi) = &memo[&key];
                        let gap = (&c.value - &psi.value).abs();
                        let allowed = (c.tail_bound + psi.tail_bound) * 1.0000002;
                        let tol = BigRational::from_float(allowed)
                            .ok_or_else(|| Failure::usage("tail bound not representable"))?;
                        if gap > tol {
                            return Err(Failure::verification(format!(
                                "c-psi deviation at p={p} h={h} k={k} l={l} m={m}: beyond combined tails {allowed:.3e}"
                            )));
                        }
                        max_tail = max_tail.max(c.tail_bound).max(psi.tail_bound);
                        pairs += 1;
                    }
                }
            }
        }
    }
    writeln!(
        out,
        "PASS c-psi: {pairs} special factor pairs within combined tails, max tail {}",
        sci(max_tail)
    )
    .unwrap();
    Ok(())
}

fn cmd_verify_expectations(a: &VerifyExpectationsArgs, out: &mut String) -> Result<(), Failure> {
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    out.push_str(ESTIMATE_HEADER);
    let mut worst = 0.0f64;
    let mut rows = 0u64;
    for &p in &a.p {
        for h in [1u64, 2, 3, 4, 6, 8] {
            for k in [2u32, 3] {
                for l in [2u32, 3] {
                    for m in [2u32, 3] {
                        let params = DivisorParams::new(k, l, m, h)?;
                        let est = exp_triple_empirical(p, &params, a.x)?;
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{},{},{}",
                            p,
                            h,
                            k,
                            l,
                            m,
                            est.x,
                            sci(est.value),
                            sci(est.closed_form),
                            sci(est.rel_error)
                        )
                        .unwrap();
                        worst = worst.max(est.rel_error);
                        rows += 1;
                    }
                }
            }
        }
    }
    if worst > a.tol {
        writeln!(out, "FAIL expectations: worst rel_error {} above {}", sci(worst), sci(a.tol))
            .unwrap();
        return Err(Failure::verification(format!(
            "expectations: worst rel_error {} above {} over {rows} rows",
            sci(worst),
            sci(a.tol)
        )));
    }
    writeln!(
        out,
        "PASS expectations: worst rel_error {} over {rows} rows",
        sci(worst)
    )
    .unwrap();
    Ok(())
}

fn cmd_verify_integral(a: &IntegralArgs, out: &mut String) -> Result<(), Failure> {
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    if !(a.x.is_finite() && a.x >= 1.0) {
        return Err(Failure::usage("--x must be at least 1"));
    }
    let lx = a.x.ln();
    let mut fact = 1.0f64;
    for i in 1..=a.r {
        fact *= i as f64;
    }
    let closed = lx.powi(a.r as i32) / fact;
    let quad_tol = a.tol.max(1e-12 * closed.abs().max(1.0));
    let got = iterated_log_integral(a.r, a.x, quad_tol)?;
    let diff = (got - closed).abs();
    writeln!(
        out,
        "integral r={} x={}: quadrature {} closed {} deviation {}",
        a.r,
        sci(a.x),
        sci(got),
        sci(closed),
        sci(diff)
    )
    .unwrap();
    if diff > a.tol {
        writeln!(out, "FAIL integral: deviation above {}", sci(a.tol)).unwrap();
        return Err(Failure::verification(format!(
            "integral r={} x={}: deviation {} above {}",
            a.r,
            sci(a.x),
            sci(diff),
            sci(a.tol)
        )));
    }
    writeln!(out, "PASS integral: within {}", sci(a.tol)).unwrap();
    Ok(())
}

fn cmd_sieve_cache(a: &SieveCacheArgs, out: &mut String) -> Result<(), Failure> {
    if a.x < 1 {
        return Err(Failure::usage("--x must be at least 1"));
    }
    std::fs::create_dir_all(&a.cache_dir)
        .map_err(|e| Failure::resource(format!("cannot create {}: {e}", a.cache_dir.display())))?;
    let path = a.cache_dir.join(format!("dk{}-1-{}.dktb", a.k, a.x));
    if let Ok(mut f) = std::fs::File::open(&path) {
        match read_dktb(&mut f) {
            Ok((k, table)) if k == a.k && table.offset == 1 && table.values.len() as u64 == a.x => {
                writeln!(
                    out,
                    "cached d_{} table for [1,{}] at {} ({} values)",
                    a.k,
                    a.x,
                    path.display(),
                    a.x
                )
                .unwrap();
                return Ok(());
            }
            // wrong version, truncated, or mismatched header: rebuild below
            Ok(_) | Err(_) => {}
        }
    }
    let table = dk_range(&SieveConfig {
        range_start: 1,
        range_end: a.x + 1,
        segment_size: 1 << 22,
        k: a.k,
    })?;
    let tmp = path.with_extension("dktb.tmp");
    let write = || -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        write_dktb(&mut f, a.k, &table)?;
        std::io::Write::flush(&mut f)?;
        drop(f);
        std::fs::rename(&tmp, &path)
    };
    write().map_err(|e| Failure::resource(format!("cannot write {}: {e}", path.display())))?;
    writeln!(
        out,
        "built d_{} table for [1,{}] at {} ({} values)",
        a.k,
        a.x,
        path.display(),
        a.x
    )
    .unwrap();
    Ok(())
}
