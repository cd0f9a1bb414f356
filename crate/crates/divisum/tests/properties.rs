//! Randomized structural properties: multiplicativity, congruence solver
//! correctness against scans, segment invariance, serialization.

use divisum::arith::{
    crt_solvable, dk_value, factorize, g_predicate, gcd, is_prime, CongruenceSystem,
    DivisorParams,
};
use divisum::empirical::triple_convolution_sum;
use divisum::sieve::{dk_range, read_dktb, write_dktb, DkTable, SieveConfig};
use proptest::prelude::*;

fn dk_of(k: u32, n: u64) -> u64 {
    dk_value(k, &factorize(n).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dk_multiplicative_on_coprime_pairs(
        a in 2u64..=1_000_000,
        b in 2u64..=1_000_000,
        k in 1u32..=6,
    ) {
        prop_assume!(gcd(a, b) == 1);
        prop_assert_eq!(dk_of(k, a * b), dk_of(k, a) * dk_of(k, b));
    }

    #[test]
    fn dk_satisfies_convolution_recurrence(n in 1u64..=20_000, k in 2u32..=6) {
        let mut acc: u64 = 0;
        for d in 1..=n {
            if n % d == 0 {
                acc += dk_of(k - 1, d);
            }
        }
        prop_assert_eq!(acc, dk_of(k, n));
    }

    #[test]
    fn factorize_roundtrip(n in 2u64..=1_000_000_000_000) {
        let f = factorize(n).unwrap();
        let mut prod: u64 = 1;
        let mut last_p = 0u64;
        for &(p, e) in &f.factors {
            prop_assert!(p > last_p, "factors not ascending");
            prop_assert!(is_prime(p), "{p} not prime");
            prop_assert!(e >= 1);
            for _ in 0..e {
                prod = prod.checked_mul(p).unwrap();
            }
            last_p = p;
        }
        prop_assert_eq!(prod, n);
    }

    #[test]
    fn g_multiplicative_on_coprime_split(
        ea in proptest::array::uniform3(0u32..=3),
        eb in proptest::array::uniform3(0u32..=3),
        ec in proptest::array::uniform3(0u32..=3),
        ed in proptest::array::uniform3(0u32..=3),
        h in 1u64..=200,
    ) {
        // first triple supported on {2,3}, second on {5,7}
        let u1 = 2u64.pow(ea[0]) * 3u64.pow(eb[0]);
        let v1 = 2u64.pow(ea[1]) * 3u64.pow(eb[1]);
        let w1 = 2u64.pow(ea[2]) * 3u64.pow(eb[2]);
        let u2 = 5u64.pow(ec[0]) * 7u64.pow(ed[0]);
        let v2 = 5u64.pow(ec[1]) * 7u64.pow(ed[1]);
        let w2 = 5u64.pow(ec[2]) * 7u64.pow(ed[2]);
        prop_assert_eq!(
            g_predicate(u1 * u2, v1 * v2, w1 * w2, h),
            g_predicate(u1, v1, w1, h) && g_predicate(u2, v2, w2, h)
        );
    }

    #[test]
    fn crt_result_is_minimal_solution(
        pairs in proptest::collection::vec((1u64..=60, -120i64..=120), 1..=3),
    ) {
        let sys = CongruenceSystem::new(pairs.clone()).unwrap();
        let total_lcm = pairs
            .iter()
            .fold(1u64, |acc, &(m, _)| acc / gcd(acc, m) * m);
        let satisfied = |n: u64| {
            pairs
                .iter()
                .all(|&(m, a)| n % m == a.rem_euclid(m as i64) as u64)
        };
        match crt_solvable(&sys).unwrap() {
            Some((r, l)) => {
                prop_assert_eq!(l, total_lcm);
                prop_assert!(r < l);
                prop_assert!(satisfied(r));
                for n in 0..r {
                    prop_assert!(!satisfied(n), "earlier solution {n} below {r}");
                }
            }
            None => {
                for n in 0..total_lcm {
                    prop_assert!(!satisfied(n), "missed solution {n}");
                }
            }
        }
    }

    #[test]
    fn dk_range_segmentation_invariant(
        start in 1u64..=1_000_000,
        len in 1u64..=4_000,
        seg_a in 1u64..=4_000,
        seg_b in 1u64..=4_000,
        k in 1u32..=6,
    ) {
        let cfg = |seg| SieveConfig {
            range_start: start,
            range_end: start + len,
            segment_size: seg,
            k,
        };
        let ta = dk_range(&cfg(seg_a)).unwrap();
        let tb = dk_range(&cfg(seg_b)).unwrap();
        prop_assert_eq!(&ta, &tb);
        let mid = start + len / 2;
        prop_assert_eq!(ta.get(mid), dk_of(k, mid));
    }

    #[test]
    fn triple_sum_monotone_in_x(
        h in 1u64..=5,
        k in 2u32..=3,
        l in 2u32..=3,
        m in 2u32..=3,
        x1 in 1u64..=3_000,
        dx in 0u64..=500,
    ) {
        let p = DivisorParams::new(k, l, m, h).unwrap();
        let lo = triple_convolution_sum(&p, x1).unwrap();
        let hi = triple_convolution_sum(&p, x1 + dx).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn dktb_roundtrip_arbitrary_tables(
        offset in 0u64..=1_000_000,
        values in proptest::collection::vec(any::<u64>(), 0..=200),
        k in 1u32..=8,
    ) {
        let table = DkTable { offset, values };
        let mut buf = Vec::new();
        write_dktb(&mut buf, k, &table).unwrap();
        let (k2, table2) = read_dktb(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(k2, k);
        prop_assert_eq!(table2, table);
    }
}
