use bfree_core::bset::SievingSet;
use bfree_core::constants::{
    a_alpha, a_squarefree, density, euler_product, partial_product, LocalFactor, Rigor,
};
use proptest::prelude::*;

#[test]
fn rigorous_intervals_contain_finer_cutoffs() {
    let checks = [
        (density(&SievingSet::squarefree(), 100_000), density(&SievingSet::squarefree(), 10_000_000)),
        (density(&SievingSet::cubefree(), 100_000), density(&SievingSet::cubefree(), 10_000_000)),
        (a_squarefree(100_000), a_squarefree(10_000_000)),
        (
            a_alpha(&SievingSet::cubefree(), 1.0 / 3.0, 100_000),
            a_alpha(&SievingSet::cubefree(), 1.0 / 3.0, 10_000_000),
        ),
    ];
    for (coarse, fine) in checks {
        let (coarse, fine) = (coarse.unwrap(), fine.unwrap());
        assert_eq!(coarse.rigor, Rigor::Rigorous);
        assert!(coarse.contains(fine.value), "{coarse:?} vs {}", fine.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn truncated_products_decrease(m in 2u32..5, lo in 100u64..50_000, extra in 0u64..1_000_000) {
        let set = SievingSet::power_free(m).unwrap();
        let f = LocalFactor::new([(-1.0, 1.0)]).unwrap();
        let hi = lo + extra;
        let a = partial_product(&set, &f, lo).unwrap();
        let b = partial_product(&set, &f, hi).unwrap();
        prop_assert!(a >= b);
        let ea = euler_product(&set, &f, lo).unwrap();
        let eb = euler_product(&set, &f, hi).unwrap();
        prop_assert!((ea.value - eb.value).abs() <= ea.abs_error + eb.abs_error);
    }

    #[test]
    fn custom_products_are_finite_products(elems in proptest::collection::btree_set(2u64..60, 1..6)) {
        let primes: Vec<u64> = elems.into_iter().filter(|&n| (2..n).all(|d| n % d != 0)).collect();
        prop_assume!(!primes.is_empty());
        let set = SievingSet::custom(primes.clone()).unwrap();
        let d = density(&set, *primes.last().unwrap()).unwrap();
        let direct: f64 = primes.iter().map(|&b| 1.0 - 1.0 / b as f64).product();
        prop_assert!((d.value - direct).abs() < 1e-15);
        prop_assert_eq!(d.abs_error, 0.0);
    }
}
