//! Direct evaluation of the correlation sums and their ratio tables
//! against predicted main terms.

use num::{BigInt, BigRational, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{
    crt_solvable, dk_value, factorize, gcd, ArithError, CongruenceSystem, DivisorParams,
};
use crate::constants::{conjecture_main_term, lower_bound_main_term, NablaResult};
use crate::sieve::{dk_range, primes_up_to, DkTable, SieveConfig, SieveError};

const SEGMENT: u64 = 1 << 20;
const MAX_X: u64 = 1_000_000_000;

#[derive(Debug, Error)]
pub enum EmpError {
    #[error("parameter out of range: {0}")]
    InvalidParam(&'static str),
    #[error("sum exceeds 128 bits")]
    Overflow,
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub x: u64,
    pub h: u64,
    pub k: u32,
    pub l: u32,
    pub m: u32,
    pub sum: u128,
    pub main_term: f64,
    pub ratio: f64,
}

/// A sum next to its predicted main term.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCheck {
    pub sum: u128,
    pub main_term: f64,
    pub ratio: f64,
}

fn check_triple_params(params: &DivisorParams, x: u64) -> Result<(), EmpError> {
    if params.k > 6 || params.l > 6 || params.m > 6 {
        return Err(EmpError::InvalidParam("k, l, m above 6"));
    }
    if x > MAX_X {
        return Err(EmpError::InvalidParam("x above 10^9"));
    }
    Ok(())
}

fn table(k: u32, start: u64, end: u64) -> Result<DkTable, EmpError> {
    Ok(dk_range(&SieveConfig {
        range_start: start,
        range_end: end,
        segment_size: end - start,
        k,
    })?)
}

/// Exact sum over one n-segment [s, e) of d_k(n+h) d_l(n) d_m(n-h).
fn triple_segment(params: &DivisorParams, s: u64, e: u64) -> Result<u128, EmpError> {
    let h = params.h;
    let (tk, tl, tm);
    if params.k == params.l && params.l == params.m {
        let all = table(params.k, s - h, e + h)?;
        tk = all.clone();
        tl = all.clone();
        tm = all;
    } else {
        tk = table(params.k, s + h, e + h)?;
        tl = table(params.l, s, e)?;
        tm = table(params.m, s - h, e - h)?;
    }
    let mut acc: u128 = 0;
    for n in s..e {
        let prod = (tk.get(n + h) as u128)
            .checked_mul(tl.get(n) as u128)
            .and_then(|p| p.checked_mul(tm.get(n - h) as u128))
            .ok_or(EmpError::Overflow)?;
        acc = acc.checked_add(prod).ok_or(EmpError::Overflow)?;
    }
    Ok(acc)
}

/// Cumulative triple sums at each breakpoint of an ascending grid; the
/// n-range is h < n <= b for breakpoint b. One parallel pass, segments
/// never straddle a breakpoint.
fn triple_prefix_sums(params: &DivisorParams, grid: &[u64]) -> Result<Vec<u128>, EmpError> {
    let h = params.h;
    let mut tasks: Vec<(u64, u64, usize)> = Vec::new();
    let mut lo = h + 1;
    for (gi, &bx) in grid.iter().enumerate() {
        while lo <= bx {
            let e = (lo + SEGMENT).min(bx + 1);
            tasks.push((lo, e, gi));
            lo = e;
        }
    }
    let partials: Vec<(usize, u128)> = tasks
        .into_par_iter()
        .map(|(s, e, gi)| triple_segment(params, s, e).map(|v| (gi, v)))
        .collect::<Result<_, _>>()?;
    let mut per_point = vec![0u128; grid.len()];
    for (gi, v) in partials {
        per_point[gi] = per_point[gi].checked_add(v).ok_or(EmpError::Overflow)?;
    }
    let mut acc: u128 = 0;
    let mut out = Vec::with_capacity(grid.len());
    for v in per_point {
        acc = acc.checked_add(v).ok_or(EmpError::Overflow)?;
        out.push(acc);
    }
    Ok(out)
}

/// T(d_k, d_l, d_m; x, h) = sum over h < n <= x of d_k(n+h) d_l(n) d_m(n-h).
/// Empty range gives 0.
pub fn triple_convolution_sum(params: &DivisorParams, x: u64) -> Result<u128, EmpError> {
    check_triple_params(params, x)?;
    if x <= params.h {
        return Ok(0);
    }
    Ok(triple_prefix_sums(params, &[x])?[0])
}

/// Same sum evaluated per n through factorize, for cross-checking the
/// sieved path.
pub fn triple_convolution_oracle(params: &DivisorParams, x: u64) -> Result<u128, EmpError> {
    check_triple_params(params, x)?;
    let h = params.h;
    let mut acc: u128 = 0;
    for n in h + 1..=x.max(h) {
        if n > x {
            break;
        }
        let a = dk_value(params.k, &factorize(n + h)?)?;
        let b = dk_value(params.l, &factorize(n)?)?;
        let c = dk_value(params.m, &factorize(n - h)?)?;
        let prod = (a as u128)
            .checked_mul(b as u128)
            .and_then(|p| p.checked_mul(c as u128))
            .ok_or(EmpError::Overflow)?;
        acc = acc.checked_add(prod).ok_or(EmpError::Overflow)?;
    }
    Ok(acc)
}

/// Pair correlation sum over 1 <= n <= x of d_k(n+h) d_l(n).
pub fn shifted_convolution_sum(k: u32, l: u32, h: u64, x: u64) -> Result<u128, EmpError> {
    if k == 0 || k > 8 || l == 0 || l > 8 {
        return Err(EmpError::InvalidParam("k, l must be in 1..=8"));
    }
    if h == 0 {
        return Err(EmpError::InvalidParam("h must be >= 1"));
    }
    if x > MAX_X {
        return Err(EmpError::InvalidParam("x above 10^9"));
    }
    if x == 0 {
        return Ok(0);
    }
    let mut tasks: Vec<(u64, u64)> = Vec::new();
    let mut lo = 1u64;
    while lo <= x {
        let e = (lo + SEGMENT).min(x + 1);
        tasks.push((lo, e));
        lo = e;
    }
    let partials: Vec<u128> = tasks
        .into_par_iter()
        .map(|(s, e)| -> Result<u128, EmpError> {
            let tk = table(k, s + h, e + h)?;
            let tl = table(l, s, e)?;
            let mut acc: u128 = 0;
            for n in s..e {
                let prod = (tk.get(n + h) as u128)
                    .checked_mul(tl.get(n) as u128)
                    .ok_or(EmpError::Overflow)?;
                acc = acc.checked_add(prod).ok_or(EmpError::Overflow)?;
            }
            Ok(acc)
        })
        .collect::<Result<_, _>>()?;
    let mut acc: u128 = 0;
    for v in partials {
        acc = acc.checked_add(v).ok_or(EmpError::Overflow)?;
    }
    Ok(acc)
}

/// Additive divisor sum over 1 <= n < N of d(n) d(N-n).
pub fn additive_convolution_sum(n_total: u64) -> Result<u128, EmpError> {
    if n_total < 2 {
        return Err(EmpError::InvalidParam("N must be >= 2"));
    }
    if n_total > 100_000_000 {
        return Err(EmpError::InvalidParam("N above 10^8"));
    }
    let t = table(2, 1, n_total)?;
    let mut acc: u128 = 0;
    for n in 1..n_total {
        let prod = (t.get(n) as u128)
            .checked_mul(t.get(n_total - n) as u128)
            .ok_or(EmpError::Overflow)?;
        acc = acc.checked_add(prod).ok_or(EmpError::Overflow)?;
    }
    Ok(acc)
}

fn check_series_params(k: u32, l: u32, m: u32, h: u64, x: u64) -> Result<(), EmpError> {
    if k == 0 || l == 0 || m == 0 {
        return Err(EmpError::InvalidParam("k, l, m must be >= 1"));
    }
    if h == 0 || h > u64::MAX / 2 {
        return Err(EmpError::InvalidParam("h out of range"));
    }
    if x == 0 || x > 500 {
        return Err(EmpError::InvalidParam("x must be in 1..=500"));
    }
    Ok(())
}

fn dkm1_array(k: u32, x: usize) -> Result<Vec<u64>, EmpError> {
    // index u in 1..=x holds d_{k-1}(u); the k = 1 weight is the
    // convolution unit, 1 only at u = 1
    let mut arr = vec![0u64; x + 1];
    if k == 1 {
        arr[1] = 1;
    } else {
        let t = table(k - 1, 1, x as u64 + 1)?;
        arr[1..=x].copy_from_slice(&t.values);
    }
    Ok(arr)
}

fn lcm_upto(x: u64) -> BigInt {
    let mut acc = BigInt::from(1);
    for p in primes_up_to(x) {
        let mut q = p;
        while q <= x / p {
            q *= p;
        }
        acc *= q;
    }
    acc
}

/// Partial sum of the congruence-weighted reciprocal-lcm series:
/// sum over u,v,w <= x of g(u,v,w) d_{k-1}(u) d_{l-1}(v) d_{m-1}(w) / [u,v,w].
/// Optimized path: pairwise gcd tables and the gcd form of g, parallel
/// over u, exact rational with the single denominator lcm(1..x).
pub fn lcm_series_sum(k: u32, l: u32, m: u32, h: u64, x: u64) -> Result<BigRational, EmpError> {
    check_series_params(k, l, m, h, x)?;
    let xu = x as usize;
    let dku = dkm1_array(k, xu)?;
    let dlv = dkm1_array(l, xu)?;
    let dmw = dkm1_array(m, xu)?;
    let mut gtab = vec![0u64; (xu + 1) * (xu + 1)];
    for u in 1..=xu {
        for v in 1..=xu {
            gtab[u * (xu + 1) + v] = gcd(u as u64, v as u64);
        }
    }
    let big_l = lcm_upto(x);
    let h2 = 2 * h as u128;
    let partials: Vec<BigInt> = (1..=xu)
        .into_par_iter()
        .map(|u| {
            let du = dku[u];
            let mut acc = BigInt::zero();
            if du == 0 {
                return acc;
            }
            for v in 1..=xu {
                let dv = dlv[v];
                if dv == 0 || h % gtab[u * (xu + 1) + v] != 0 {
                    continue;
                }
                let luv = (u * v) as u64 / gtab[u * (xu + 1) + v];
                for w in 1..=xu {
                    let dw = dmw[w];
                    if dw == 0
                        || h % gtab[v * (xu + 1) + w] != 0
                        || h2 % gtab[u * (xu + 1) + w] as u128 != 0
                    {
                        continue;
                    }
                    let luvw = luv / gcd(luv, w as u64) * w as u64;
                    acc += BigInt::from(du * dv * dw) * (&big_l / luvw);
                }
            }
            acc
        })
        .collect();
    let mut total = BigInt::zero();
    for p in partials {
        total += p;
    }
    Ok(BigRational::new(total, big_l))
}

/// Naive path of the same series: per-triple congruence solving decides g
/// and produces the lcm.
pub fn lcm_series_sum_oracle(
    k: u32,
    l: u32,
    m: u32,
    h: u64,
    x: u64,
) -> Result<BigRational, EmpError> {
    check_series_params(k, l, m, h, x)?;
    if h > i64::MAX as u64 {
        return Err(EmpError::InvalidParam("h out of range"));
    }
    let xu = x as usize;
    let dku = dkm1_array(k, xu)?;
    let dlv = dkm1_array(l, xu)?;
    let dmw = dkm1_array(m, xu)?;
    let big_l = lcm_upto(x);
    let mut total = BigInt::zero();
    for u in 1..=xu {
        if dku[u] == 0 {
            continue;
        }
        for v in 1..=xu {
            if dlv[v] == 0 {
                continue;
            }
            for w in 1..=xu {
                if dmw[w] == 0 {
                    continue;
                }
                let sys = CongruenceSystem::new([
                    (u as u64, -(h as i64)),
                    (v as u64, 0),
                    (w as u64, h as i64),
                ])?;
                if let Some((_, lcm)) = crt_solvable(&sys)? {
                    total += BigInt::from(dku[u] * dlv[v] * dmw[w]) * (&big_l / lcm);
                }
            }
        }
    }
    Ok(BigRational::new(total, big_l))
}

/// Convergence table: one row per grid point with the exact sum, the
/// predicted main term, and their ratio. `lower_bound` switches the main
/// term to the proven lower-bound variant.
pub fn ratio_table(
    params: &DivisorParams,
    x_grid: &[u64],
    nabla: &NablaResult,
    lower_bound: bool,
) -> Result<Vec<RatioRow>, EmpError> {
    for pair in x_grid.windows(2) {
        if pair[0] >= pair[1] {
            return Err(EmpError::InvalidParam("x grid must be strictly ascending"));
        }
    }
    if let Some(&first) = x_grid.first() {
        if first < 2 {
            return Err(EmpError::InvalidParam("x grid points must be >= 2"));
        }
    }
    if let Some(&last) = x_grid.last() {
        check_triple_params(params, last)?;
    }
    let sums = triple_prefix_sums(params, x_grid)?;
    Ok(x_grid
        .iter()
        .zip(sums)
        .map(|(&x, sum)| {
            let main_term = if lower_bound {
                lower_bound_main_term(nabla.nabla, params, x)
            } else {
                conjecture_main_term(nabla.nabla, params, x)
            };
            RatioRow {
                x,
                h: params.h,
                k: params.k,
                l: params.l,
                m: params.m,
                sum,
                main_term,
                ratio: sum as f64 / main_term,
            }
        })
        .collect())
}

fn sigma1_f64(n: u64) -> Result<f64, EmpError> {
    Ok(factorize(n)?.sigma1() as f64)
}

/// Pair correlation against the proven asymptotic
/// (6/pi^2) sigma_{-1}(h) N (log N)^2.
pub fn ingham_check(h: u64, n_upper: u64) -> Result<PairCheck, EmpError> {
    if n_upper < 10 {
        return Err(EmpError::InvalidParam("N must be >= 10"));
    }
    let sum = shifted_convolution_sum(2, 2, h, n_upper)?;
    let sigma_m1 = sigma1_f64(h)? / h as f64;
    let lx = (n_upper as f64).ln();
    let main_term = 6.0 / (std::f64::consts::PI * std::f64::consts::PI)
        * sigma_m1
        * n_upper as f64
        * lx
        * lx;
    Ok(PairCheck { sum, main_term, ratio: sum as f64 / main_term })
}

/// Additive divisor sum against (6/pi^2) sigma_1(N) (log N)^2.
pub fn additive_check(n_total: u64) -> Result<PairCheck, EmpError> {
    let sum = additive_convolution_sum(n_total)?;
    let lx = (n_total as f64).ln();
    let main_term =
        6.0 / (std::f64::consts::PI * std::f64::consts::PI) * sigma1_f64(n_total)? * lx * lx;
    Ok(PairCheck { sum, main_term, ratio: sum as f64 / main_term })
}
