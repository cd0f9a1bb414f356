//! Euler products for the singular constant of triple divisor correlations.
//!
//! For parameters (k, l, m; h) the constant factors over primes. At a prime
//! p not dividing 2h the local factor is the closed form
//!
//!   eta_p = (1-1/p)^{k-1}(1-1/p)^{l-1} + (1-1/p)^{l-1}(1-1/p)^{m-1}
//!         + (1-1/p)^{m-1}(1-1/p)^{k-1}
//!         - 2 (1-1/p)^{k-1}(1-1/p)^{l-1}(1-1/p)^{m-1},
//!
//! evaluated here through its exact polynomial expansion in 1/p. At the
//! finitely many p dividing 2h the local factor is a congruence-weighted
//! lcm sum computed two independent ways: `c_factor_direct` enumerates the
//! exponent lattice, `psi_factor_odd` / `psi_factor_two` evaluate the same
//! quantity as a probabilistic expectation in closed series form. Every
//! factor carries an exact rational value plus a rigorous truncation tail,
//! and the assembled constant carries an absolute error bound.

use num::traits::Pow;
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{
    dk_prime_power, factorize, g_prime_power, is_prime, vp, ArithError, DivisorParams,
};
use crate::sieve::primes_up_to;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstError {
    #[error("parameter out of range: {0}")]
    InvalidParam(&'static str),
    #[error("budget: {0}")]
    Budget(&'static str),
    #[error("exponent cutoff too small at p = {p}: need at least {need}")]
    ExponentCutoff { p: u64, need: u32 },
    #[error("series majorant diverges at p = {p}: raise the series cutoff")]
    MajorantDiverges { p: u64 },
    #[error("prime cutoff {cutoff} too small for a valid tail bound")]
    PrimeCutoff { cutoff: u64 },
    #[error("tolerance {tol:e} not certifiable at depth {r}")]
    Tolerance { r: u32, tol: f64 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Truncation knobs for the Euler product. `exponent_cutoff` caps the
/// exponent lattice in the direct local factors (must exceed the relevant
/// valuation by at least 2), `series_cutoff` caps the expectation series,
/// `prime_cutoff` is where the generic product is cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBudget {
    pub prime_cutoff: u64,
    pub exponent_cutoff: u32,
    pub series_cutoff: u32,
    pub target_abs_tol: f64,
}

impl TruncationBudget {
    /// Defaults that certify tails below 1e-9 for every h up to a few
    /// hundred: exponent cutoff 80 past the largest valuation of h.
    pub fn default_for(params: &DivisorParams) -> Self {
        let alpha_max = factorize(params.h)
            .map(|f| f.factors.iter().map(|&(_, e)| e).max().unwrap_or(0))
            .unwrap_or(0);
        Self {
            prime_cutoff: 100_000,
            exponent_cutoff: alpha_max + 80,
            series_cutoff: 200,
            target_abs_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<(), ConstError> {
        if self.prime_cutoff < 3 {
            return Err(ConstError::Budget("prime cutoff must be >= 3"));
        }
        if self.prime_cutoff > 1 << 31 {
            return Err(ConstError::Budget("prime cutoff above 2^31"));
        }
        if self.exponent_cutoff < 2 {
            return Err(ConstError::Budget("exponent cutoff must be >= 2"));
        }
        if self.exponent_cutoff > 10_000 {
            return Err(ConstError::Budget("exponent cutoff above 10^4"));
        }
        if self.series_cutoff < 4 {
            return Err(ConstError::Budget("series cutoff must be >= 4"));
        }
        if self.series_cutoff > 100_000 {
            return Err(ConstError::Budget("series cutoff above 10^5"));
        }
        if !(self.target_abs_tol > 0.0) {
            return Err(ConstError::Budget("target tolerance must be positive"));
        }
        Ok(())
    }
}

/// One local factor: exact value of the truncated sum plus an upper bound
/// on everything the truncation dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerFactorValue {
    pub value: BigRational,
    pub tail_bound: f64,
}

/// A special local factor of the assembled constant (p | 2h), already
/// scaled by (1-1/p)^{k+l+m-3}.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeFactor {
    pub p: u64,
    pub value: BigRational,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NablaResult {
    pub params: DivisorParams,
    pub budget: TruncationBudget,
    pub nabla: f64,
    pub abs_error_bound: f64,
    pub per_prime_log: Vec<PrimeFactor>,
}

/// Rounds an arbitrary-size rational to f64 without overflowing on huge
/// numerators or denominators: shift to an 80-bit integer quotient first.
pub(crate) fn rat_f64(r: &BigRational) -> f64 {
    let n = r.numer();
    let d = r.denom();
    if n.is_zero() {
        return 0.0;
    }
    let neg = n.is_negative();
    let n = n.abs();
    let t = 80 + d.bits() as i64 - n.bits() as i64;
    let q = if t >= 0 { (n << t as usize) / d } else { (n >> (-t) as usize) / d };
    let v = q.to_f64().unwrap_or(f64::INFINITY) * (-t as f64).exp2();
    if neg {
        -v
    } else {
        v
    }
}

fn bigpow(p: u64, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

fn dk3(k: u32, l: u32, m: u32, j1: u32, j2: u32, j3: u32) -> Result<BigInt, ConstError> {
    let a = dk_prime_power(k, 0, j1)? as u128;
    let b = dk_prime_power(l, 0, j2)? as u128;
    let c = dk_prime_power(m, 0, j3)? as u128;
    let ab = a.checked_mul(b).ok_or(ArithError::Overflow)?;
    let abc = ab.checked_mul(c).ok_or(ArithError::Overflow)?;
    Ok(BigInt::from(abc))
}

fn signed_binomial_row(e: u32) -> Vec<i64> {
    // coefficients of (1 - X)^e
    let mut row = vec![0i64; e as usize + 1];
    for (i, slot) in row.iter_mut().enumerate() {
        let b = dk_prime_power(e - i as u32 + 1, 0, i as u32).unwrap() as i64;
        *slot = if i % 2 == 0 { b } else { -b };
    }
    row
}

/// Monomial coefficients of eta as a polynomial in X, Y, Z:
/// eta = sum coeffs[i][j][t] X^i Y^j Z^t, degrees up to k-1, l-1, m-1.
pub(crate) fn eta_coeffs(k: u32, l: u32, m: u32) -> Vec<Vec<Vec<i64>>> {
    let a = signed_binomial_row(k - 1);
    let b = signed_binomial_row(l - 1);
    let c = signed_binomial_row(m - 1);
    let mut out = vec![vec![vec![0i64; c.len()]; b.len()]; a.len()];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            for (t, &ct) in c.iter().enumerate() {
                let mut v = -2 * ai * bj * ct;
                if t == 0 {
                    v += ai * bj;
                }
                if i == 0 {
                    v += bj * ct;
                }
                if j == 0 {
                    v += ai * ct;
                }
                out[i][j][t] = v;
            }
        }
    }
    out
}

/// Sums of absolute coefficient values of eta - 1 grouped by total degree.
pub(crate) fn eta_abs_degree_sums(k: u32, l: u32, m: u32) -> Vec<f64> {
    let coeffs = eta_coeffs(k, l, m);
    let deg = (k + l + m - 3) as usize;
    let mut sums = vec![0.0f64; deg + 1];
    for (i, plane) in coeffs.iter().enumerate() {
        for (j, line) in plane.iter().enumerate() {
            for (t, &v) in line.iter().enumerate() {
                let d = i + j + t;
                if d == 0 {
                    continue;
                }
                sums[d] += v.unsigned_abs() as f64;
            }
        }
    }
    sums
}

/// Generic local factor eta_p for an odd prime not dividing 2h, evaluated
/// exactly from the polynomial expansion at X = Y = Z = 1/p.
pub fn eta_factor(p: u64, k: u32, l: u32, m: u32) -> Result<EulerFactorValue, ConstError> {
    if k == 0 || l == 0 || m == 0 {
        return Err(ConstError::InvalidParam("k, l, m must be >= 1"));
    }
    if p < 3 || !is_prime(p) {
        return Err(ConstError::InvalidParam("p must be an odd prime"));
    }
    let coeffs = eta_coeffs(k, l, m);
    let deg = (k + l + m - 3) as usize;
    let mut num = BigInt::zero();
    for (i, plane) in coeffs.iter().enumerate() {
        for (j, line) in plane.iter().enumerate() {
            for (t, &v) in line.iter().enumerate() {
                if v != 0 {
                    num += BigInt::from(v) * bigpow(p, (deg - (i + j + t)) as u32);
                }
            }
        }
    }
    Ok(EulerFactorValue {
        value: BigRational::new(num, bigpow(p, deg as u32)),
        tail_bound: 0.0,
    })
}

/// Direct local factor at p | 2h: the sum over exponent triples
/// (v1, v2, v3) of d_{k-1}(p^v1) d_{l-1}(p^v2) d_{m-1}(p^v3) g / p^max,
/// g being the prime-power congruence indicator. Exponents are cut at
/// `exponent_cutoff`; the cut tail is bounded by geometric majorants.
///
/// The lattice is enumerated as a small cube plus three thin slabs: with
/// a = vp(h) and a2 = a (+1 if p = 2), at most one exponent can exceed a2,
/// and on each slab the surviving cross-section is a fixed rectangle.
pub fn c_factor_direct(
    p: u64,
    h: u64,
    k: u32,
    l: u32,
    m: u32,
    exponent_cutoff: u32,
) -> Result<EulerFactorValue, ConstError> {
    if k == 0 || l == 0 || m == 0 {
        return Err(ConstError::InvalidParam("k, l, m must be >= 1"));
    }
    if h == 0 {
        return Err(ConstError::InvalidParam("h must be >= 1"));
    }
    if !is_prime(p) || (2 * h as u128) % p as u128 != 0 {
        return Err(ConstError::InvalidParam("p must be a prime dividing 2h"));
    }
    let alpha = vp(p, h);
    let a2 = alpha + u32::from(p == 2);
    let v_cut = exponent_cutoff;
    if v_cut < alpha + 2 {
        return Err(ConstError::ExponentCutoff { p, need: alpha + 2 });
    }
    let pw: Vec<BigInt> = {
        let mut pw = Vec::with_capacity(v_cut as usize + 1);
        let mut cur = BigInt::from(1);
        for _ in 0..=v_cut {
            pw.push(cur.clone());
            cur *= p;
        }
        pw
    };
    let mut num = BigInt::zero();
    for v1 in 0..=a2 {
        for v2 in 0..=a2 {
            for v3 in 0..=a2 {
                if g_prime_power(p, v1, v2, v3, h) {
                    let mx = v1.max(v2).max(v3);
                    num += dk3(k - 1, l - 1, m - 1, v1, v2, v3)?
                        * &pw[(v_cut - mx) as usize];
                }
            }
        }
    }
    // rectangle cross-sections for the three slabs
    let col = |ord: u32, hi: u32| -> Result<u64, ConstError> {
        let mut s = 0u64;
        for v in 0..=hi {
            s += dk_prime_power(ord, 0, v)?;
        }
        Ok(s)
    };
    let sum_k_a = col(k - 1, alpha)?;
    let sum_k_a2 = col(k - 1, a2)?;
    let sum_l_a = col(l - 1, alpha)?;
    let sum_m_a = col(m - 1, alpha)?;
    let sum_m_a2 = col(m - 1, a2)?;
    let slabs: [(u32, u64); 3] = [
        (k, sum_l_a * sum_m_a2),
        (l, sum_k_a * sum_m_a),
        (m, sum_k_a2 * sum_l_a),
    ];
    for (ord, coeff) in slabs {
        for v in a2 + 1..=v_cut {
            let d = dk_prime_power(ord - 1, 0, v)?;
            num += BigInt::from(d as u128 * coeff as u128) * &pw[(v_cut - v) as usize];
        }
    }
    let value = BigRational::new(num, pw[v_cut as usize].clone());
    let mut tail = 0.0f64;
    let lp = (p as f64).ln();
    for (ord, coeff) in slabs {
        let rho = (ord + v_cut) as f64 / ((v_cut + 2) as f64 * p as f64);
        if rho >= 1.0 {
            return Err(ConstError::MajorantDiverges { p });
        }
        let first = dk_prime_power(ord - 1, 0, v_cut + 1)?;
        let log_t = (first as f64).ln() + (coeff as f64).ln() - (v_cut + 1) as f64 * lp;
        tail += log_t.exp() / (1.0 - rho);
    }
    Ok(EulerFactorValue { value, tail_bound: tail })
}

/// Expectation form of the local factor at an odd prime p with
/// alpha = vp(h) >= 1: a finite prefix below alpha, three escalating
/// series with the other two exponents pinned at alpha, and a boundary
/// term that vanishes at p = 3.
pub fn psi_factor_odd(
    p: u64,
    alpha: u32,
    k: u32,
    l: u32,
    m: u32,
    series_cutoff: u32,
) -> Result<EulerFactorValue, ConstError> {
    if k == 0 || l == 0 || m == 0 {
        return Err(ConstError::InvalidParam("k, l, m must be >= 1"));
    }
    if p < 3 || !is_prime(p) {
        return Err(ConstError::InvalidParam("p must be an odd prime"));
    }
    if alpha == 0 {
        return Err(ConstError::InvalidParam("alpha must be >= 1"));
    }
    if series_cutoff < 4 {
        return Err(ConstError::Budget("series cutoff must be >= 4"));
    }
    let i_cut = series_cutoff;
    let kmax = k.max(l).max(m);
    let rho = (1.0 + 1.0 / i_cut as f64).powi(kmax as i32 + 2) / p as f64;
    if rho >= 1.0 {
        return Err(ConstError::MajorantDiverges { p });
    }
    let top = alpha + i_cut + 1;
    let pw: Vec<BigInt> = {
        let mut pw = Vec::with_capacity(top as usize + 1);
        let mut cur = BigInt::from(1);
        for _ in 0..=top {
            pw.push(cur.clone());
            cur *= p;
        }
        pw
    };
    // bracket * p^{alpha + i_cut}
    let mut bracket = BigInt::zero();
    for i in 0..alpha {
        bracket += dk3(k, l, m, i, i, i)? * &pw[(alpha + i_cut - i) as usize];
    }
    for i in 1..=i_cut {
        let scale = &pw[(i_cut - i) as usize];
        bracket += dk3(k, l, m, alpha + i, alpha, alpha)? * scale;
        bracket += dk3(k, l, m, alpha, alpha + i, alpha)? * scale;
        bracket += dk3(k, l, m, alpha, alpha, alpha + i)? * scale;
    }
    let mut num = BigInt::from(p - 1) * bracket;
    num += (BigInt::from(p) - 3) * dk3(k, l, m, alpha, alpha, alpha)? * &pw[i_cut as usize];
    let value = BigRational::new(num, pw[top as usize].clone());
    let lp = (p as f64).ln();
    let pinned = |o1: u32, o2: u32| -> Result<f64, ConstError> {
        Ok((dk_prime_power(o1, 0, alpha)? as f64).ln() + (dk_prime_power(o2, 0, alpha)? as f64).ln())
    };
    let mut tail = 0.0f64;
    for (ord, others) in [(k, pinned(l, m)?), (l, pinned(k, m)?), (m, pinned(k, l)?)] {
        let first = dk_prime_power(ord, 0, alpha + i_cut + 1)?;
        let log_t = (first as f64).ln() + others - (alpha + i_cut + 1) as f64 * lp;
        tail += log_t.exp();
    }
    tail *= (1.0 - 1.0 / p as f64) / (1.0 - rho);
    Ok(EulerFactorValue { value, tail_bound: tail })
}

/// Expectation form of the local factor at p = 2, alpha = v2(h) >= 0.
/// The asymmetric escalation pattern (the m slot rides at alpha + 1 in the
/// first series, the k slot in the third, minus a boundary correction) is
/// kept exactly as the expectation calculation produces it.
pub fn psi_factor_two(
    alpha: u32,
    k: u32,
    l: u32,
    m: u32,
    series_cutoff: u32,
) -> Result<EulerFactorValue, ConstError> {
    if k == 0 || l == 0 || m == 0 {
        return Err(ConstError::InvalidParam("k, l, m must be >= 1"));
    }
    if series_cutoff < 4 {
        return Err(ConstError::Budget("series cutoff must be >= 4"));
    }
    let i_cut = series_cutoff;
    let kmax = k.max(l).max(m);
    let rho = (1.0 + 1.0 / i_cut as f64).powi(kmax as i32 + 2) / 2.0;
    if rho >= 1.0 {
        return Err(ConstError::MajorantDiverges { p: 2 });
    }
    let top = alpha + i_cut + 1;
    let pw: Vec<BigInt> = {
        let mut pw = Vec::with_capacity(top as usize + 1);
        let mut cur = BigInt::from(1);
        for _ in 0..=top {
            pw.push(cur.clone());
            cur *= 2;
        }
        pw
    };
    let mut num = BigInt::zero();
    for i in 0..alpha {
        num += dk3(k, l, m, i, i, i)? * &pw[(alpha + i_cut - i) as usize];
    }
    for i in 1..=i_cut {
        let scale = &pw[(i_cut - i) as usize];
        num += dk3(k, l, m, alpha + i, alpha, alpha + 1)? * scale;
        num += dk3(k, l, m, alpha, alpha + i, alpha)? * scale;
        num += dk3(k, l, m, alpha + 1, alpha, alpha + i)? * scale;
    }
    num -= dk3(k, l, m, alpha + 1, alpha, alpha + 1)? * &pw[i_cut as usize];
    let value = BigRational::new(num, pw[top as usize].clone());
    let ln2 = std::f64::consts::LN_2;
    let mut tail = 0.0f64;
    let firsts = [
        dk3(k, l, m, alpha + i_cut + 1, alpha, alpha + 1)?,
        dk3(k, l, m, alpha, alpha + i_cut + 1, alpha)?,
        dk3(k, l, m, alpha + 1, alpha, alpha + i_cut + 1)?,
    ];
    for f in firsts {
        let log_t = rat_f64(&BigRational::from(f)).ln() - (alpha + i_cut + 1) as f64 * ln2;
        tail += log_t.exp();
    }
    tail *= 0.5 / (1.0 - rho);
    Ok(EulerFactorValue { value, tail_bound: tail })
}

/// Upper bound on sum over primes above the cutoff of |ln eta_p|, graded
/// by monomial degree: the degree-2 coefficient mass rides on a sharp
/// bound for sum p^{-2}, everything higher on integral comparisons.
fn generic_prime_tail(prime_cutoff: u64, sums: &[f64]) -> Result<f64, ConstError> {
    debug_assert!(sums.len() < 2 || sums[1] == 0.0);
    let pf = prime_cutoff as f64;
    let mut mass = 0.0;
    for (d, s) in sums.iter().enumerate().skip(2) {
        mass += s * pf.powi(-(d as i32));
    }
    if !(mass <= 0.5) {
        return Err(ConstError::PrimeCutoff { cutoff: prime_cutoff });
    }
    // primes above P fall in the 8 reduced residue classes mod 30, so
    // sum_{p>P} p^-2 <= 8 (P^-2 + integral_P^inf (P + 30t)^-2 dt)
    let b2 = if prime_cutoff >= 61 {
        8.0 * (1.0 / (pf * pf) + 1.0 / (30.0 * pf))
    } else {
        1.0 / (pf - 1.0)
    };
    let mut tail = 0.0;
    for (d, s) in sums.iter().enumerate().skip(2) {
        if *s == 0.0 {
            continue;
        }
        if d == 2 {
            tail += s * b2;
        } else {
            tail += s * pf.powi(1 - d as i32) / (d as f64 - 1.0);
        }
    }
    Ok(2.0 * tail)
}

/// Assembles the singular constant: special factors at every p | 2h via
/// the direct route, generic eta factors up to the prime cutoff, the rest
/// bounded. Factors are folded in log space in ascending prime order with
/// compensated summation, so the result does not depend on threading.
pub fn nabla_constant(
    params: &DivisorParams,
    budget: &TruncationBudget,
) -> Result<NablaResult, ConstError> {
    budget.validate()?;
    let (k, l, m, h) = (params.k, params.l, params.m, params.h);
    if h > u64::MAX / 2 {
        return Err(ConstError::InvalidParam("h too large"));
    }
    let special: Vec<(u64, u32)> = factorize(2 * h)?
        .factors
        .iter()
        .map(|&(p, _)| (p, vp(p, h)))
        .collect();
    let kdeg = k + l + m - 3;
    let mut per_prime: Vec<PrimeFactor> = Vec::new();
    for &(p, _alpha) in &special {
        let c = c_factor_direct(p, h, k, l, m, budget.exponent_cutoff)?;
        let scale = BigRational::new(BigInt::from(p - 1), BigInt::from(p)).pow(kdeg as i32);
        let scale_f = rat_f64(&scale);
        per_prime.push(PrimeFactor {
            p,
            value: c.value * &scale,
            tail_bound: c.tail_bound * scale_f,
        });
    }
    let sums = eta_abs_degree_sums(k, l, m);
    let tail_log = generic_prime_tail(budget.prime_cutoff, &sums)?;

    let mut log_sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut kahan = |x: f64| {
        let y = x - comp;
        let t = log_sum + y;
        comp = (t - log_sum) - y;
        log_sum = t;
    };
    let mut log_err = tail_log;
    let mut special_iter = per_prime.iter().peekable();
    let mut generic = primes_up_to(budget.prime_cutoff).into_iter().peekable();
    loop {
        let next_special = special_iter.peek().map(|f| f.p);
        let next_gen = loop {
            match generic.peek() {
                Some(&p) if special.iter().any(|&(q, _)| q == p) => {
                    generic.next();
                }
                other => break other.copied(),
            }
        };
        match (next_special, next_gen) {
            (None, None) => break,
            (Some(ps), Some(pg)) if ps < pg => {
                let f = special_iter.next().unwrap();
                let v = rat_f64(&f.value);
                if !(f.tail_bound < v) {
                    return Err(ConstError::Budget("tail exceeds local factor"));
                }
                kahan(v.ln());
                log_err += f.tail_bound / (v - f.tail_bound);
            }
            (Some(_), None) => {
                let f = special_iter.next().unwrap();
                let v = rat_f64(&f.value);
                if !(f.tail_bound < v) {
                    return Err(ConstError::Budget("tail exceeds local factor"));
                }
                kahan(v.ln());
                log_err += f.tail_bound / (v - f.tail_bound);
            }
            (_, Some(pg)) => {
                generic.next();
                let eta = eta_factor(pg, k, l, m)?;
                let delta = rat_f64(&(eta.value - BigRational::from(BigInt::from(1))));
                kahan(delta.ln_1p());
            }
        }
    }
    let nabla = log_sum.exp();
    let abs_error_bound = nabla * log_err.exp_m1();
    Ok(NablaResult {
        params: *params,
        budget: *budget,
        nabla,
        abs_error_bound,
        per_prime_log: per_prime,
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Predicted main term nabla * x (log x)^{k+l+m-3} / ((k-1)!(l-1)!(m-1)!).
pub fn conjecture_main_term(nabla: f64, params: &DivisorParams, x: u64) -> f64 {
    let kdeg = (params.k + params.l + params.m - 3) as i32;
    let lx = (x as f64).ln();
    nabla * x as f64 * lx.powi(kdeg)
        / (factorial(params.k - 1) * factorial(params.l - 1) * factorial(params.m - 1))
}

/// Proven lower-bound variant: the conjectured main term divided by
/// 3^{k+l+m-3}.
pub fn lower_bound_main_term(nabla: f64, params: &DivisorParams, x: u64) -> f64 {
    let kdeg = (params.k + params.l + params.m - 3) as i32;
    conjecture_main_term(nabla, params, x) / 3.0f64.powi(kdeg)
}

fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let h = b - a;
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let s1 = h / 6.0 * (fa + 4.0 * fm + fb);
    let s2 = h / 12.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb);
    if depth == 0 || (s2 - s1).abs() <= 15.0 * tol {
        return s2 + (s2 - s1) / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1)
}

fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 40)
}

fn log_power_iterate(r: u32, upper: f64, tol: f64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    let inner_tol = tol / (4.0 * (upper + 1.0));
    integrate(|s| log_power_iterate(r - 1, s, inner_tol), 0.0, upper, tol / 2.0)
}

/// Numeric value of the r-fold iterated integral of 1 from 0 to log x,
/// which is (log x)^r / r! in closed form; computed by nested adaptive
/// quadrature so the closed form stays an independent check. Depth at
/// most 6.
pub fn iterated_log_integral(r: u32, x: f64, tol: f64) -> Result<f64, ConstError> {
    if r > 6 {
        return Err(ConstError::InvalidParam("depth r above 6"));
    }
    if !(x >= 1.0) || !x.is_finite() {
        return Err(ConstError::InvalidParam("x must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(ConstError::InvalidParam("tolerance must be positive"));
    }
    let upper = x.ln();
    let scale = upper.powi(r as i32) / factorial(r);
    if tol < 1e-13 * scale.max(1.0) {
        return Err(ConstError::Tolerance { r, tol });
    }
    Ok(log_power_iterate(r, upper, tol))
}
