//! Prime-local expectations of divisor weights and their finite-x
//! empirical estimators.
//!
//! For a prime p the random variables of interest are X(n) = d_k(p^{v_p(n+h)}),
//! Y(n) = d_l(p^{v_p(n)}), Z(n) = d_m(p^{v_p(n-h)}) under natural density.
//! Closed forms: E(X) = (1-1/p)^{1-k}; E(XYZ) splits into three cases by
//! how p sits against h. Estimators count residue classes exactly, so the
//! only gap to the closed forms is the finite range itself.

use num::traits::Pow;
use num::{BigRational, One};
use thiserror::Error;

use crate::arith::{
    crt_solvable, dk_prime_power, is_prime, vp, CongruenceSystem, DivisorParams,
};
use crate::constants::{
    psi_factor_odd, psi_factor_two, rat_f64, ConstError, EulerFactorValue, TruncationBudget,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpError {
    #[error("parameter out of range: {0}")]
    InvalidParam(&'static str),
    #[error("empty sample range: need x > h")]
    EmptyRange,
    #[error("sample bound below the supported floor: {0}")]
    BelowFloor(&'static str),
    #[error(transparent)]
    Const(#[from] ConstError),
}

/// Which case of the local expectation applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalCase {
    OddCoprime,
    OddDividing,
    Two,
}

/// A fully resolved local query: prime, shift, slot orders, with the
/// valuation alpha = v_p(h) and the case tag derived once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalExpectationQuery {
    p: u64,
    h: u64,
    k: u32,
    l: u32,
    m: u32,
    alpha: u32,
    case: LocalCase,
}

impl LocalExpectationQuery {
    pub fn new(p: u64, h: u64, k: u32, l: u32, m: u32) -> Result<Self, ExpError> {
        if !is_prime(p) {
            return Err(ExpError::InvalidParam("p must be prime"));
        }
        if h == 0 {
            return Err(ExpError::InvalidParam("h must be >= 1"));
        }
        if k < 2 || l < 2 || m < 2 {
            return Err(ExpError::InvalidParam("k, l, m must be >= 2"));
        }
        let alpha = vp(p, h);
        let case = if p == 2 {
            LocalCase::Two
        } else if alpha == 0 {
            LocalCase::OddCoprime
        } else {
            LocalCase::OddDividing
        };
        Ok(Self { p, h, k, l, m, alpha, case })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn h(&self) -> u64 {
        self.h
    }
    pub fn orders(&self) -> (u32, u32, u32) {
        (self.k, self.l, self.m)
    }
    pub fn alpha(&self) -> u32 {
        self.alpha
    }
    pub fn case(&self) -> LocalCase {
        self.case
    }
}

/// An exact finite-x average next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalEstimate {
    pub x: u64,
    pub value: f64,
    pub closed_form: f64,
    pub rel_error: f64,
}

/// E(X_p) = (1-1/p)^{1-k} = (p/(p-1))^{k-1}.
pub fn exp_single_closed(p: u64, k: u32) -> BigRational {
    assert!(p >= 2 && k >= 1);
    BigRational::new(p.into(), (p - 1).into()).pow((k - 1) as i32)
}

/// E(X_p Y_p Z_p) by case: coprime odd primes get the closed bracket,
/// the rest the truncated expectation series.
pub fn exp_triple_closed(
    q: &LocalExpectationQuery,
    budget: &TruncationBudget,
) -> Result<EulerFactorValue, ExpError> {
    match q.case {
        LocalCase::OddCoprime => {
            let two = BigRational::one() + BigRational::one();
            let value = exp_single_closed(q.p, q.k) + exp_single_closed(q.p, q.l)
                + exp_single_closed(q.p, q.m)
                - two;
            Ok(EulerFactorValue { value, tail_bound: 0.0 })
        }
        LocalCase::OddDividing => {
            Ok(psi_factor_odd(q.p, q.alpha, q.k, q.l, q.m, budget.series_cutoff)?)
        }
        LocalCase::Two => Ok(psi_factor_two(q.alpha, q.k, q.l, q.m, budget.series_cutoff)?),
    }
}

fn pow_within(p: u64, cap: u64) -> Vec<u64> {
    // p^0 .. p^j with p^j <= cap
    let mut pows = vec![1u64];
    while let Some(next) = pows.last().unwrap().checked_mul(p) {
        if next > cap {
            break;
        }
        pows.push(next);
    }
    pows
}

/// Exact average of d_k(p^{v_p(n + h_offset)}) over h < n <= x, counted
/// through multiples of p^j rather than by scanning n. h_offset picks the
/// slot: -h, 0, or +h.
pub fn exp_single_empirical(
    p: u64,
    k: u32,
    h: u64,
    h_offset: i64,
    x: u64,
) -> Result<EmpiricalEstimate, ExpError> {
    if !is_prime(p) {
        return Err(ExpError::InvalidParam("p must be prime"));
    }
    if k == 0 {
        return Err(ExpError::InvalidParam("k must be >= 1"));
    }
    if h == 0 || h > i64::MAX as u64 {
        return Err(ExpError::InvalidParam("h out of range"));
    }
    if h_offset != 0 && h_offset.unsigned_abs() != h {
        return Err(ExpError::InvalidParam("h_offset must be -h, 0, or +h"));
    }
    if x < 1_000 {
        return Err(ExpError::BelowFloor("exp_single_empirical needs x >= 10^3"));
    }
    if x > i64::MAX as u64 {
        return Err(ExpError::InvalidParam("x too large"));
    }
    if x <= h {
        return Err(ExpError::EmptyRange);
    }
    let lo = (h as i64 + h_offset) as u64;
    let hi = (x as i64).checked_add(h_offset).ok_or(ExpError::InvalidParam("x + offset overflows"))? as u64;
    let n_count = x - h;
    let mut sum: u128 = n_count as u128;
    for (j, pj) in pow_within(p, hi).iter().enumerate().skip(1) {
        let cnt = (hi / pj - lo / pj) as u128;
        let w = dk_prime_power(k - 1, p, j as u32).map_err(ConstError::from)?;
        sum += w as u128 * cnt;
    }
    let value = sum as f64 / n_count as f64;
    let closed_form = rat_f64(&exp_single_closed(p, k));
    Ok(EmpiricalEstimate {
        x,
        value,
        closed_form,
        rel_error: (value - closed_form).abs() / closed_form,
    })
}

/// Exact average of the triple product d_k(p^{v_p(n+h)}) d_l(p^{v_p(n)})
/// d_m(p^{v_p(n-h)}) over h < n <= x. Counts each valuation box
/// {v1 = a, v2 = b, v3 = c} by inclusion-exclusion over the CRT-counted
/// boxes {v1 >= a, v2 >= b, v3 >= c}, so the cost is (log x)^3 solver
/// calls rather than a scan.
pub fn exp_triple_empirical(
    p: u64,
    params: &DivisorParams,
    x: u64,
) -> Result<EmpiricalEstimate, ExpError> {
    let q = LocalExpectationQuery::new(p, params.h, params.k, params.l, params.m)?;
    if x < 10_000 {
        return Err(ExpError::BelowFloor("exp_triple_empirical needs x >= 10^4"));
    }
    let h = params.h;
    if x <= h {
        return Err(ExpError::EmptyRange);
    }
    if x > u64::MAX - h {
        return Err(ExpError::InvalidParam("x too large"));
    }
    let n_count = x - h;
    let pow_a = pow_within(p, x + h);
    let pow_b = pow_within(p, x);
    let pow_c = pow_within(p, x - h);
    let (na, nb, nc) = (pow_a.len(), pow_b.len(), pow_c.len());
    // count_ge[a][b][c] = #{h < n <= x : p^a | n+h, p^b | n, p^c | n-h}
    let mut count_ge = vec![0i128; (na + 1) * (nb + 1) * (nc + 1)];
    let at = |a: usize, b: usize, c: usize| (a * (nb + 1) + b) * (nc + 1) + c;
    for a in 0..=na {
        for b in 0..=nb {
            for c in 0..=nc {
                if a == na || b == nb || c == nc {
                    continue; // boundary stays 0: p^a beyond cap divides nothing in range
                }
                let sys = CongruenceSystem::new([
                    (pow_a[a], -(h as i64)),
                    (pow_b[b], 0),
                    (pow_c[c], h as i64),
                ])
                .map_err(ConstError::from)?;
                count_ge[at(a, b, c)] = match crt_solvable(&sys).map_err(ConstError::from)? {
                    None => 0,
                    Some((r, lcm)) => {
                        let upto = |t: u64| -> i128 {
                            if t >= r {
                                ((t - r) / lcm + 1) as i128
                            } else {
                                0
                            }
                        };
                        upto(x) - upto(h)
                    }
                };
            }
        }
    }
    let mut sum: i128 = 0;
    let (k, l, m) = q.orders();
    for a in 0..na {
        for b in 0..nb {
            for c in 0..nc {
                let eq = count_ge[at(a, b, c)] - count_ge[at(a + 1, b, c)]
                    - count_ge[at(a, b + 1, c)]
                    - count_ge[at(a, b, c + 1)]
                    + count_ge[at(a + 1, b + 1, c)]
                    + count_ge[at(a + 1, b, c + 1)]
                    + count_ge[at(a, b + 1, c + 1)]
                    - count_ge[at(a + 1, b + 1, c + 1)];
                if eq == 0 {
                    continue;
                }
                let w = dk_prime_power(k, p, a as u32).map_err(ConstError::from)? as i128
                    * dk_prime_power(l, p, b as u32).map_err(ConstError::from)? as i128
                    * dk_prime_power(m, p, c as u32).map_err(ConstError::from)? as i128;
                sum += w * eq;
            }
        }
    }
    let value = sum as f64 / n_count as f64;
    let budget = TruncationBudget::default_for(params);
    let closed = exp_triple_closed(&q, &budget)?;
    let closed_form = rat_f64(&closed.value);
    Ok(EmpiricalEstimate {
        x,
        value,
        closed_form,
        rel_error: (value - closed_form).abs() / closed_form,
    })
}

/// Finite-x surrogate of the natural density of an event: the exact count
/// of n <= x satisfying it, over x.
pub fn density_estimate<F: Fn(u64) -> bool>(event: F, x: u64) -> f64 {
    assert!(x >= 1);
    let mut count: u64 = 0;
    for n in 1..=x {
        if event(n) {
            count += 1;
        }
    }
    count as f64 / x as f64
}
