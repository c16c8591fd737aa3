mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use hwq_core::bounds::*;
use hwq_core::deduce::replay::replay_certificate;
use hwq_core::Limits;
use num_bigint::BigInt;
use proptest::prelude::*;

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

#[test]
fn free_abelian_values_for_n_up_to_200() {
    for n in 0..=200i64 {
        let c = n * (n - 1) / 2;
        let eps = c % 2;
        let piecewise = match n {
            3 => 2,
            5 => 6,
            _ if n % 4 == 0 || n % 4 == 1 => (n - 1) * (n - 4) / 2,
            _ => (n - 1) * (n - 4) / 2 + 1,
        };
        assert_eq!(epsilon(n as u64) as i64, eps, "n = {n}");
        assert_eq!(h_value(n as u64), big(h_oracle(n)), "n = {n}");
        assert_eq!(q_free_abelian(n as u64), big(piecewise), "n = {n}");
        assert_eq!(q_free_abelian(n as u64), big(2 - 2 * n) + h_value(n as u64), "n = {n}");
    }
    let small: Vec<BigInt> = (0..5).map(q_free_abelian).collect();
    assert_eq!(small, [2, 0, 0, 2, 0].map(big));
    assert_eq!(free_row(5), (5, big(10), 0, big(14), big(6)));
}

#[test]
fn deficiency_bounds() {
    let r = hw_bounds(6, 15, -9).unwrap();
    assert_eq!((r.lower, r.upper), (big(5), big(20)));
    assert!(hw_bounds(2, 1, 0).unwrap().exact.is_none());
    assert!(matches!(hw_bounds(0, 5, 0), Err(BoundsError::LowerExceedsUpper { .. })));
}

#[test]
fn mod_p_ranks_table() {
    for k in 1..=10u64 {
        for n in 0..=10u64 {
            let spec = AbelianGroupSpec::new(vec![2; k as usize], n).unwrap();
            let m = (k + n) as i64;
            assert_eq!(mod_p_ranks(&spec).unwrap(), (big(m), big(m * (m - 1) / 2 + k as i64)));
        }
    }
}

#[test]
fn exact_abelian_values() {
    let ds = [2u64, 3, 6, 12];
    for d in ds {
        let r = abelian_q_bounds(&AbelianGroupSpec::new(vec![d], 0).unwrap()).unwrap();
        assert_eq!(r.exact, Some(big(2)), "Z/{d}");
        for e in ds.iter().filter(|e| *e % d == 0) {
            let r = abelian_q_bounds(&AbelianGroupSpec::new(vec![d, *e], 0).unwrap()).unwrap();
            assert_eq!(r.exact, Some(big(2)), "Z/{d}+Z/{e}");
        }
    }
    for chain in [vec![2, 2, 2, 2], vec![2, 2, 6, 12], vec![3, 3, 6, 12]] {
        let r = abelian_q_bounds(&AbelianGroupSpec::new(chain.clone(), 1).unwrap()).unwrap();
        assert_eq!(r.exact, Some(big(6)), "{chain:?}");
    }
    assert_eq!(abelian_q_bounds(&AbelianGroupSpec::new(vec![], 2).unwrap()), Err(BoundsError::EmptyTorsion));
}

/// Upper bound: mod-p value plus the smaller of the two gaps.
fn closed_form_upper(k: i64, n: i64) -> i64 {
    let c = |m: i64| m * (m - 1) / 2;
    let eps = |m: i64| c(m) % 2;
    1 - n + c(n + k - 1) + ((n - 1).abs() + eps(n + k - 1)).min(k + eps(n + k))
}

#[test]
fn constructions_meet_closed_form_upper_bound() {
    // (k, n) outside the window whose needed realizers are bundled
    for (k, n) in [(7, 0), (1, 6), (2, 5), (3, 5), (4, 4), (1, 8), (8, 0), (9, 0)] {
        let spec = AbelianGroupSpec::new(vec![2; k as usize], n as u64).unwrap();
        let mut best = i64::MAX;
        for family in 1..=3u8 {
            let Some(sym) = family_chi(family, k as u64, n as u64) else { continue };
            match construct_family(family, &spec) {
                Ok(m) => {
                    assert_eq!(BigInt::from(m.chi), sym, "family {family} for {spec}");
                    let p = m.verify_pi1(&spec.invariants(), Limits::default()).unwrap();
                    assert!(p.pass(), "family {family} for {spec}");
                    best = best.min(m.chi);
                }
                Err(BoundsError::NoRealizer(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(best, closed_form_upper(k, n), "{spec}");
        let r = abelian_q_bounds(&spec).unwrap();
        assert_eq!(r.upper, big(closed_form_upper(k, n)));
    }
}

#[test]
fn bounds_are_consistent_and_exact_values_are_realized() {
    for k in 1..=7u64 {
        for n in 0..=(7 - k) {
            let spec = AbelianGroupSpec::new(vec![2; k as usize], n).unwrap();
            let r = abelian_q_bounds(&spec).unwrap();
            assert!(r.lower <= r.upper, "{spec}");
            let (ki, ni) = (k as i64, n as i64);
            let modp = 1 - ni + (ni + ki - 1) * (ni + ki - 2) / 2;
            let rational = 2 - 2 * n as i64 + (n as i64 * (n as i64 - 1)) / 2;
            assert!(r.lower >= big(modp.max(rational)), "{spec}");
            if let Some(exact) = r.exact {
                let realized = (1..=3u8)
                    .filter_map(|f| family_chi(f, k, n))
                    .any(|chi| chi == exact);
                assert!(realized, "{spec}: exact {exact} has no construction");
            }
        }
    }
}

#[test]
fn closures_match_divisibility_description() {
    let start = Instant::now();
    let r = r_closure(30);
    let expected: BTreeSet<(u32, u32)> =
        (3..=30).flat_map(|m| (3..=30).map(move |n| (m, n))).filter(|(m, n)| (m * n) % 6 == 0).collect();
    assert_eq!(r, expected);
    let (s, witness) = s_closure(100);
    let expected: BTreeSet<u32> = [0, 1, 2, 4].into_iter().chain(6..=100).collect();
    assert_eq!(s, expected);
    let r100 = r_closure(100);
    for (t, (m, n)) in [(10, (4, 6)), (13, (4, 9)), (14, (6, 8)), (15, (6, 9)), (16, (4, 12)), (17, (8, 9))] {
        assert!(s_step_applies(&s, &r100, m, n), "{t} via ({m},{n})");
        assert_eq!(m + n, t);
    }
    for (t, (m, n)) in &witness {
        assert_eq!(m + n, *t);
        assert!(s_step_applies(&s, &r100, *m, *n));
    }
    assert!(start.elapsed() < Duration::from_secs(10));
}

/// Sign of sorting the concatenation of two index lists, zero on overlap.
fn wedge_sign(a: &[u32], b: &[u32]) -> i64 {
    let mut all: Vec<u32> = a.iter().chain(b).copied().collect();
    let mut swaps = 0;
    for i in 0..all.len() {
        for j in 0..all.len() - 1 - i {
            if all[j] == all[j + 1] {
                return 0;
            }
            if all[j] > all[j + 1] {
                all.swap(j, j + 1);
                swaps += 1;
            }
        }
    }
    if all.windows(2).any(|w| w[0] == w[1]) {
        return 0;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

#[test]
fn isotropy_witnesses_match_permutation_signs() {
    let r5 = isotropy_witness(5).unwrap();
    let classes: Vec<[u32; 2]> = vec![[1, 2], [1, 3], [1, 4], [1, 5], [2, 3], [2, 4], [2, 5]];
    let mut supports = BTreeSet::new();
    for a in &classes {
        for b in &classes {
            let s = wedge_sign(a, b);
            let got = Multivector::basis(5, a).wedge(&Multivector::basis(5, b)).unwrap();
            if s == 0 {
                assert!(got.is_zero());
            } else {
                let mut idx: Vec<u32> = a.iter().chain(b).copied().collect();
                idx.sort();
                assert_eq!(got, Multivector::basis(5, &idx).scale(&big(s)));
                supports.insert(idx.iter().map(|i| i.to_string()).collect::<String>());
            }
        }
    }
    let labels: Vec<String> = supports.iter().map(|s| format!("e{s}")).collect();
    assert_eq!(r5.supports, labels);
    assert_eq!(labels, ["e1234", "e1235", "e1245"]);
    assert!(r5.annihilated_by_e1);
    assert!(isotropy_witness(3).unwrap().all_products_zero);
}

fn multivector(n: u32) -> impl Strategy<Value = Multivector> {
    prop::collection::vec((0u64..(1 << n), -3i64..=3), 0..6).prop_map(move |terms| {
        terms.into_iter().fold(Multivector::zero(n), |acc, (mask, c)| {
            let idx: Vec<u32> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            acc.add(&Multivector::basis(n, &idx).scale(&big(c))).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn wedge_is_associative_and_bilinear(a in multivector(5), b in multivector(5), c in multivector(5)) {
        let ab_c = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let a_bc = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        let left = a.add(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&c).unwrap().add(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn degree_one_elements_anticommute(i in 1u32..=5, j in 1u32..=5) {
        let (a, b) = (Multivector::basis(5, &[i]), Multivector::basis(5, &[j]));
        prop_assert_eq!(a.wedge(&b).unwrap(), b.wedge(&a).unwrap().scale(&big(-1)));
    }
}

#[test]
fn tuple_search() {
    let opts = SearchOptions::default();
    let r = search_tuples(3, 4, &opts).unwrap();
    let hit = &r.hits[0];
    assert_eq!(hit.tuples.len(), 2);
    replay_certificate(&r.presentation, &hit.tuples, &hit.certificate).unwrap();
    assert!(hwq_core::spanning_check(&r.presentation, &hit.tuples, &[]).spans);
    let again = search_tuples(3, 4, &opts).unwrap();
    assert_eq!(again.hits[0].tuples, hit.tuples);
    assert_eq!(search_tuples(3, 3, &opts).unwrap_err(), SearchError::NotDivisible(3, 3));
    assert_eq!(search_tuples(2, 4, &opts).unwrap_err(), SearchError::NotDivisible(2, 4));
    assert_eq!(search_tuples(2, 6, &opts).unwrap_err(), SearchError::TooSmall);
    let tiny = SearchOptions { budget: 50, ..SearchOptions::default() };
    assert_eq!(search_tuples(3, 4, &tiny).unwrap_err(), SearchError::BudgetExhausted(50));
    let singles = SearchOptions { max_word_length: 1, ..SearchOptions::default() };
    assert_eq!(search_tuples(3, 4, &singles).unwrap_err(), SearchError::NotFound);
}
