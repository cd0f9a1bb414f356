//! Cross-checks against independently coded oracles: hyperbola-method
//! divisor sums, exhaustive congruence solving, and closed forms.

use divisum::arith::{dk_value, factorize, vp, CongruenceSystem, DivisorParams};
use divisum::constants::{eta_factor, nabla_constant, TruncationBudget};
use divisum::empirical::{ratio_table, triple_convolution_oracle, triple_convolution_sum};
use divisum::expectations::{exp_triple_closed, exp_triple_empirical, LocalExpectationQuery};
use divisum::sieve::{dk_range, SieveConfig};
use divisum::{arith, DkTable};
use num::traits::Pow;
use num::BigRational;
use rayon::prelude::*;

fn whole_table(k: u32, start: u64, end: u64) -> DkTable {
    dk_range(&SieveConfig { range_start: start, range_end: end, segment_size: end - start, k })
        .unwrap()
}

#[test]
fn divisor_convolution_identity_exhaustive() {
    // d_k(n) = sum over a | n of d_{k-1}(a) for n <= 10^4, k <= 6
    const N: u64 = 10_000;
    let mut prev = whole_table(1, 1, N + 1);
    for k in 2..=6u32 {
        let cur = whole_table(k, 1, N + 1);
        let mut acc = vec![0u64; N as usize + 1];
        for a in 1..=N as usize {
            let da = prev.get(a as u64);
            let mut n = a;
            while n <= N as usize {
                acc[n] += da;
                n += a;
            }
        }
        for n in 1..=N {
            assert_eq!(acc[n as usize], cur.get(n), "k={k} n={n}");
        }
        prev = cur;
    }
}

#[test]
fn g_predicate_matches_crt_exhaustively() {
    for h in 1..=20i64 {
        for u in 1..=50u64 {
            for v in 1..=50u64 {
                for w in 1..=50u64 {
                    let sys =
                        CongruenceSystem::new([(u, -h), (v, 0), (w, h)]).unwrap();
                    let solvable = arith::crt_solvable(&sys).unwrap().is_some();
                    assert_eq!(
                        arith::g_predicate(u, v, w, h as u64),
                        solvable,
                        "u={u} v={v} w={w} h={h}"
                    );
                }
            }
        }
    }
}

#[test]
fn segment_size_invariance_spec_sizes() {
    const END: u64 = 100_001;
    let whole = whole_table(4, 1, END);
    for seg in [1024u64, 65536] {
        let t = dk_range(&SieveConfig {
            range_start: 1,
            range_end: END,
            segment_size: seg,
            k: 4,
        })
        .unwrap();
        assert_eq!(t, whole, "segment_size={seg}");
    }
}

fn isqrt(x: u64) -> u64 {
    let mut s = (x as f64).sqrt() as u64;
    while s * s > x {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= x {
        s += 1;
    }
    s
}

#[test]
fn divisor_average_order_dirichlet() {
    // hyperbola method: sum_{n<=x} d(n) = 2 sum_{a<=sqrt x} floor(x/a) - floor(sqrt x)^2
    const X: u64 = 10_000_000;
    let s = isqrt(X);
    let mut hyper: u128 = 0;
    for a in 1..=s {
        hyper += (X / a) as u128;
    }
    hyper = 2 * hyper - (s as u128) * (s as u128);

    let mut sieved: u128 = 0;
    let t = dk_range(&SieveConfig {
        range_start: 1,
        range_end: X + 1,
        segment_size: 1 << 21,
        k: 2,
    })
    .unwrap();
    for &v in &t.values {
        sieved += v as u128;
    }
    assert_eq!(sieved, hyper);

    let gamma = 0.577_215_664_901_532_9_f64;
    let secondary = sieved as f64 / X as f64 - (X as f64).ln();
    assert!(
        (secondary - (2.0 * gamma - 1.0)).abs() < 0.01,
        "secondary term {secondary}"
    );
}

#[test]
fn triple_sum_matches_factorization_oracle_wide() {
    let mut cases = Vec::new();
    for h in 1..=10u64 {
        for k in [2u32, 3] {
            for l in [2u32, 3] {
                for m in [2u32, 3] {
                    cases.push((h, k, l, m));
                }
            }
        }
    }
    cases.into_par_iter().for_each(|(h, k, l, m)| {
        let p = DivisorParams::new(k, l, m, h).unwrap();
        for x in [1u64, h, h + 1, 97, 1_000, 100_000] {
            assert_eq!(
                triple_convolution_sum(&p, x).unwrap(),
                triple_convolution_oracle(&p, x).unwrap(),
                "h={h} k={k} l={l} m={m} x={x}"
            );
        }
    });
}

#[test]
fn closed_bracket_matches_eta_at_coprime_primes() {
    // for odd p not dividing 2h the expectation bracket times
    // (1-1/p)^{k+l+m-3} must reproduce the eta factor exactly
    let budget = TruncationBudget::default_for(&DivisorParams::new(2, 2, 2, 1).unwrap());
    for p in [3u64, 5, 7, 31, 97] {
        for k in 2..=4u32 {
            for l in 2..=4u32 {
                for m in 2..=4u32 {
                    let q = LocalExpectationQuery::new(p, 1, k, l, m).unwrap();
                    let bracket = exp_triple_closed(&q, &budget).unwrap();
                    assert_eq!(bracket.tail_bound, 0.0);
                    let damp = BigRational::new((p - 1).into(), p.into())
                        .pow((k + l + m - 3) as i32);
                    let eta = eta_factor(p, k, l, m).unwrap();
                    assert_eq!(
                        eta.value,
                        bracket.value * damp,
                        "p={p} k={k} l={l} m={m}"
                    );
                }
            }
        }
    }
}

#[test]
fn empirical_expectation_error_shrinks_with_x() {
    let mut cases = Vec::new();
    for p in [2u64, 3, 5, 7] {
        for h in 1..=8u64 {
            for k in [2u32, 3] {
                for l in [2u32, 3] {
                    for m in [2u32, 3] {
                        cases.push((p, h, k, l, m));
                    }
                }
            }
        }
    }
    cases.into_par_iter().for_each(|(p, h, k, l, m)| {
        let params = DivisorParams::new(k, l, m, h).unwrap();
        let coarse = exp_triple_empirical(p, &params, 10_000).unwrap();
        let fine = exp_triple_empirical(p, &params, 10_000_000).unwrap();
        assert!(
            fine.rel_error < coarse.rel_error,
            "p={p} h={h} k={k} l={l} m={m}: {} at 1e7 vs {} at 1e4",
            fine.rel_error,
            coarse.rel_error
        );
    });
}

#[test]
fn slot_swap_shares_main_terms() {
    let budget = |params: &DivisorParams| {
        let mut b = TruncationBudget::default_for(params);
        b.prime_cutoff = 2_000;
        b
    };
    let fwd = DivisorParams::new(2, 3, 4, 6).unwrap();
    let rev = DivisorParams::new(4, 3, 2, 6).unwrap();
    let nf = nabla_constant(&fwd, &budget(&fwd)).unwrap();
    let nr = nabla_constant(&rev, &budget(&rev)).unwrap();
    assert_eq!(nf.nabla.to_bits(), nr.nabla.to_bits());
    let grid = [100u64, 1_000];
    let rows_f = ratio_table(&fwd, &grid, &nf, false).unwrap();
    let rows_r = ratio_table(&rev, &grid, &nr, false).unwrap();
    for (a, b) in rows_f.iter().zip(&rows_r) {
        assert_eq!(a.main_term.to_bits(), b.main_term.to_bits(), "x={}", a.x);
    }
}

#[test]
fn power_series_remainder_bounded() {
    // partial sums of sum_j d_k(p^j) x^j against (1-x)^{-k}, with the
    // first-omitted-term remainder bound when its decay factor is positive
    for p in [2u64, 3, 5] {
        for k in 1..=6u32 {
            for &x in &[0.1f64, 0.3, 0.5, 0.7, 0.9] {
                for j_top in [5u32, 10, 20, 40] {
                    let mut partial = 0.0f64;
                    for j in 0..=j_top {
                        partial +=
                            arith::dk_prime_power(k, p, j).unwrap() as f64 * x.powi(j as i32);
                    }
                    let closed = (1.0 - x).powi(-(k as i32));
                    let first_omitted = arith::dk_prime_power(k, p, j_top + 1).unwrap() as f64
                        * x.powi(j_top as i32 + 1);
                    let decay = 1.0 - x * (1.0 + 1.0 / j_top as f64).powi(k as i32 - 1);
                    if decay > 0.0 {
                        // the extra 1e-13 absorbs accumulated f64 roundoff,
                        // which dwarfs the true remainder at large J
                        assert!(
                            (partial - closed).abs()
                                <= first_omitted / decay * 1.0000001 + 1e-13 * closed,
                            "p={p} k={k} x={x} J={j_top}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn special_prime_exponent_dependence_only() {
    // the two-route factors at p | 2h depend on h only through v_p(h)
    let b = TruncationBudget::default_for(&DivisorParams::new(3, 3, 3, 12).unwrap());
    let a1 = divisum::constants::c_factor_direct(3, 3, 3, 3, 3, b.exponent_cutoff).unwrap();
    let a2 = divisum::constants::c_factor_direct(3, 15, 3, 3, 3, b.exponent_cutoff).unwrap();
    assert_eq!(a1.value, a2.value);
    assert_eq!(vp(3, 3), vp(3, 15));
    let t1 = divisum::constants::psi_factor_two(2, 2, 2, 2, b.series_cutoff).unwrap();
    let t2 = divisum::constants::psi_factor_two(vp(2, 4), 2, 2, 2, b.series_cutoff).unwrap();
    assert_eq!(t1.value, t2.value);
}

#[test]
fn factorization_oracle_checks_dk_table() {
    // spot equality of sieved d_k against multiplicative evaluation
    let t = whole_table(5, 999_000, 1_000_001);
    for n in [999_000u64, 999_983, 1_000_000, 999_999] {
        let f = factorize(n).unwrap();
        assert_eq!(t.get(n), dk_value(5, &f).unwrap(), "n={n}");
    }
}
