//! Integer primitives: factorization, generalised divisor values, congruences.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("value must be positive")]
    ZeroValue,
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("parameter out of range: {0}")]
    InvalidParam(&'static str),
    #[error("intermediate value exceeds 64 bits")]
    Overflow,
}

/// Prime factorization of a positive 64-bit integer, exponents in
/// ascending prime order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Sum of divisors, exact in 128 bits.
    pub fn sigma1(&self) -> u128 {
        self.factors.iter().fold(1u128, |acc, &(p, e)| {
            let p = p as u128;
            let mut geo = 1u128;
            let mut pw = 1u128;
            for _ in 0..e {
                pw *= p;
                geo += pw;
            }
            acc * geo
        })
    }
}

/// Parameters of a triple correlation: slot orders k, l, m and shift h,
/// all at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisorParams {
    pub k: u32,
    pub l: u32,
    pub m: u32,
    pub h: u64,
}

impl DivisorParams {
    pub fn new(k: u32, l: u32, m: u32, h: u64) -> Result<Self, ArithError> {
        if k == 0 || l == 0 || m == 0 {
            return Err(ArithError::InvalidParam("k, l, m must be >= 1"));
        }
        if h == 0 {
            return Err(ArithError::InvalidParam("h must be >= 1"));
        }
        Ok(Self { k, l, m, h })
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// p-adic valuation of n. Requires p >= 2 and n >= 1.
pub fn vp(p: u64, n: u64) -> u32 {
    assert!(p >= 2 && n >= 1, "vp needs p >= 2 and n >= 1");
    let mut n = n;
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 1usize << 16;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= limit {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

fn mulmod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1u64 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, n);
        }
        base = mulmod(base, base, n);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64 (seven fixed witnesses).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for a in [2u64, 325, 9375, 28178, 450775, 9780504, 1795265022] {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent's cycle variant of Pollard rho. n must be odd, composite, > 1.
fn rho_factor(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        let mut count = 0u32;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
            count += 1;
            if count > 1 << 22 {
                break;
            }
        }
        if d != n && d != 1 {
            return d;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = rho_factor(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Factorizes 1 <= n < 2^63. Trial division over primes below 2^16, then
/// Miller-Rabin plus Pollard rho on the remaining cofactor.
pub fn factorize(n: u64) -> Result<Factorization, ArithError> {
    if n == 0 {
        return Err(ArithError::ZeroValue);
    }
    let mut rem = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for &p in small_primes() {
        let p = p as u64;
        if p * p > rem {
            break;
        }
        if rem % p == 0 {
            let mut e = 0;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rem > 1 {
        if rem < (1u64 << 32) || is_prime(rem) {
            factors.push((rem, 1));
        } else {
            let mut large = Vec::new();
            factor_into(rem, &mut large);
            large.sort_unstable();
            let mut i = 0;
            while i < large.len() {
                let p = large[i];
                let mut e = 0;
                while i < large.len() && large[i] == p {
                    e += 1;
                    i += 1;
                }
                factors.push((p, e));
            }
        }
    }
    Ok(Factorization { value: n, factors })
}

/// d_k at a prime power: the number of ordered k-factorizations of p^j,
/// which is binom(k+j-1, j). Independent of p; the prime argument is kept
/// so call sites read like the multiplicative definition. k = 0 gives the
/// multiplicative unit (1 at j = 0, else 0).
pub fn dk_prime_power(k: u32, _p: u64, j: u32) -> Result<u64, ArithError> {
    let mut acc: u128 = 1;
    for i in 0..j as u128 {
        acc = acc
            .checked_mul(k as u128 + i)
            .ok_or(ArithError::Overflow)?
            / (i + 1);
    }
    u64::try_from(acc).map_err(|_| ArithError::Overflow)
}

/// d_k(n) from a factorization, by multiplicativity.
pub fn dk_value(k: u32, f: &Factorization) -> Result<u64, ArithError> {
    let mut acc = 1u64;
    for &(p, e) in &f.factors {
        acc = acc
            .checked_mul(dk_prime_power(k, p, e)?)
            .ok_or(ArithError::Overflow)?;
    }
    Ok(acc)
}

/// A system of congruences n = r_i (mod m_i). Residues are stored reduced
/// into [0, m_i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceSystem {
    pairs: Vec<(u64, u64)>,
}

impl CongruenceSystem {
    pub fn new<I>(congruences: I) -> Result<Self, ArithError>
    where
        I: IntoIterator<Item = (u64, i64)>,
    {
        let mut pairs = Vec::new();
        for (modulus, residue) in congruences {
            if modulus == 0 {
                return Err(ArithError::ZeroModulus);
            }
            let m = modulus as i128;
            let r = ((residue as i128 % m) + m) % m;
            pairs.push((modulus, r as u64));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }
}

/// Solves a congruence system. Returns the unique solution as
/// (residue, lcm of moduli) when the system is solvable, None otherwise.
/// The system is solvable iff gcd(m_i, m_j) divides r_i - r_j for every
/// pair, which the sequential merge checks as it goes. An empty system is
/// vacuously solvable by everything, reported as (0, 1).
pub fn crt_solvable(system: &CongruenceSystem) -> Result<Option<(u64, u64)>, ArithError> {
    let mut r0: u64 = 0;
    let mut m0: u64 = 1;
    for &(m1, r1) in &system.pairs {
        let g = gcd(m0, m1);
        let diff = r1 as i128 - r0 as i128;
        if diff % g as i128 != 0 {
            return Ok(None);
        }
        let lcm = (m0 / g).checked_mul(m1).ok_or(ArithError::Overflow)?;
        let m0g = (m0 / g) as i128;
        let m1g = (m1 / g) as i128;
        let (_, inv, _) = egcd(m0g % m1g, m1g);
        let t = ((diff / g as i128) % m1g * inv).rem_euclid(m1g);
        let r = (r0 as i128 + m0 as i128 * t).rem_euclid(lcm as i128);
        r0 = r as u64;
        m0 = lcm;
    }
    Ok(Some((r0, m0)))
}

/// Indicator that the system n = -h (mod u), n = 0 (mod v), n = h (mod w)
/// has a solution. Equivalent to the pairwise conditions gcd(u,v) | h,
/// gcd(v,w) | h, gcd(u,w) | 2h.
pub fn g_predicate(u: u64, v: u64, w: u64, h: u64) -> bool {
    h % gcd(u, v) == 0 && h % gcd(v, w) == 0 && (2 * h as u128) % (gcd(u, w) as u128) == 0
}

/// g at a prime-power triple (u, v, w) = (p^nu1, p^nu2, p^nu3), phrased in
/// exponents so no powers are materialized. With a = vp(h), the pairwise
/// conditions become min(nu1,nu2) <= a, min(nu2,nu3) <= a, and
/// min(nu1,nu3) <= a + 1 if p = 2 else a.
pub fn g_prime_power(p: u64, nu1: u32, nu2: u32, nu3: u32, h: u64) -> bool {
    let a = vp(p, h);
    let a2 = a + u32::from(p == 2);
    nu1.min(nu2) <= a && nu2.min(nu3) <= a && nu1.min(nu3) <= a2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fac(n: u64) -> Factorization {
        factorize(n).unwrap()
    }

    #[test]
    fn factorize_small() {
        assert_eq!(fac(12).factors, vec![(2, 2), (3, 1)]);
        assert_eq!(fac(1).factors, vec![]);
        assert_eq!(fac(97).factors, vec![(97, 1)]);
        assert_eq!(factorize(0), Err(ArithError::ZeroValue));
    }

    #[test]
    fn factorize_large() {
        // product of two 31-bit primes, out of trial division range
        let p = 2147483647u64;
        let q = 2147483629u64;
        assert_eq!(fac(p * q).factors, vec![(q, 1), (p, 1)]);
        let f = fac((1u64 << 62) + 1);
        let back: u64 = f
            .factors
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product();
        assert_eq!(back, f.value);
        assert!(f.factors.iter().all(|&(p, _)| is_prime(p)));
    }

    #[test]
    fn dk_at_prime_powers() {
        assert_eq!(dk_prime_power(2, 5, 3).unwrap(), 4);
        assert_eq!(dk_prime_power(3, 5, 2).unwrap(), 6);
        assert_eq!(dk_prime_power(1, 5, 5).unwrap(), 1);
        assert_eq!(dk_prime_power(4, 5, 0).unwrap(), 1);
        assert_eq!(dk_prime_power(0, 5, 0).unwrap(), 1);
        assert_eq!(dk_prime_power(0, 5, 2).unwrap(), 0);
        assert!(dk_prime_power(u32::MAX, 2, 40).is_err());
    }

    #[test]
    fn dk_values() {
        assert_eq!(dk_value(2, &fac(6)).unwrap(), 4);
        assert_eq!(dk_value(3, &fac(12)).unwrap(), 18);
        assert_eq!(dk_value(5, &fac(1)).unwrap(), 1);
    }

    #[test]
    fn vp_basic() {
        assert_eq!(vp(2, 48), 4);
        assert_eq!(vp(3, 48), 1);
        assert_eq!(vp(5, 48), 0);
    }

    #[test]
    fn crt_examples() {
        let sys = CongruenceSystem::new([(2, 1), (3, 2)]).unwrap();
        assert_eq!(crt_solvable(&sys).unwrap(), Some((5, 6)));
        let sys = CongruenceSystem::new([(2, 0), (2, 1)]).unwrap();
        assert_eq!(crt_solvable(&sys).unwrap(), None);
        let sys = CongruenceSystem::new([(4, 1), (6, 3)]).unwrap();
        assert_eq!(crt_solvable(&sys).unwrap(), Some((9, 12)));
        let sys = CongruenceSystem::new([]).unwrap();
        assert_eq!(crt_solvable(&sys).unwrap(), Some((0, 1)));
    }

    #[test]
    fn crt_negative_residues_reduce() {
        let sys = CongruenceSystem::new([(5, -1), (3, -4)]).unwrap();
        assert_eq!(sys.pairs(), &[(5, 4), (3, 2)]);
        assert_eq!(crt_solvable(&sys).unwrap(), Some((14, 15)));
    }

    #[test]
    fn crt_lcm_overflow() {
        let sys = CongruenceSystem::new([(u64::MAX, 0), (u64::MAX - 1, 0)]).unwrap();
        assert_eq!(crt_solvable(&sys), Err(ArithError::Overflow));
    }

    #[test]
    fn g_examples() {
        assert!(g_predicate(4, 3, 5, 1));
        assert!(!g_predicate(2, 4, 1, 1));
        assert!(g_predicate(2, 1, 2, 1));
        assert!(!g_predicate(3, 1, 3, 1));
    }

    #[test]
    fn g_prime_power_examples() {
        assert!(g_prime_power(3, 2, 0, 0, 1));
        assert!(!g_prime_power(3, 1, 1, 0, 1));
        assert!(g_prime_power(2, 1, 0, 1, 1));
    }

    #[test]
    fn g_matches_crt_on_a_stripe() {
        for u in 1..=12u64 {
            for v in 1..=12 {
                for w in 1..=12 {
                    for h in 1..=6 {
                        let sys = CongruenceSystem::new([
                            (u, -(h as i64)),
                            (v, 0),
                            (w, h as i64),
                        ])
                        .unwrap();
                        let solvable = crt_solvable(&sys).unwrap().is_some();
                        assert_eq!(g_predicate(u, v, w, h), solvable, "u={u} v={v} w={w} h={h}");
                    }
                }
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(DivisorParams::new(2, 2, 2, 1).is_ok());
        assert!(DivisorParams::new(0, 2, 2, 1).is_err());
        assert!(DivisorParams::new(2, 2, 2, 0).is_err());
    }

    #[test]
    fn sigma1_values() {
        assert_eq!(fac(1).sigma1(), 1);
        assert_eq!(fac(6).sigma1(), 12);
        assert_eq!(fac(12).sigma1(), 28);
    }
}
