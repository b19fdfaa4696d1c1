use bfree_core::bset::SievingSet;
use bfree_core::stats::{
    empirical_moments, gap_moment_inequality, weighted_moments, window_histogram, Center,
    StepFunction,
};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn sets() -> impl Strategy<Value = SievingSet> {
    prop_oneof![
        Just(SievingSet::squarefree()),
        Just(SievingSet::cubefree()),
        Just(SievingSet::custom(vec![4, 9, 25, 7]).unwrap()),
        Just(SievingSet::custom(vec![2, 9]).unwrap()),
    ]
}

fn brute_counts(set: &SievingSet, x: u64, h: u64) -> Vec<u64> {
    let mut counts = vec![0u64; h as usize + 1];
    for n in 1..=x {
        counts[(n + 1..=n + h).filter(|&u| set.is_bfree(u)).count()] += 1;
    }
    counts
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn histogram_is_exact(set in sets(), x in 40u64..3000, h in 1u64..40) {
        let hist = window_histogram(&set, x, h).unwrap();
        prop_assert_eq!(hist.total(), x);
        prop_assert_eq!(hist.counts, brute_counts(&set, x, h));
    }

    #[test]
    fn moments_about_two_centres(set in sets(), x in 30u64..5000, h in 1u64..30, shift in -2.0f64..2.0) {
        let hist = window_histogram(&set, x, h).unwrap();
        let mean = hist.mean().to_f64().unwrap();
        let m = empirical_moments(&hist, Center::exact(mean), &[1, 2]).unwrap();
        prop_assert!(m.get(1).unwrap().abs() < 1e-12);
        let c = (mean + shift).clamp(0.0, h as f64);
        let about_c = empirical_moments(&hist, Center::exact(c), &[2]).unwrap();
        // M₂(c) = M₂(mean) + (mean − c)².
        let want = m.get(2).unwrap() + (mean - c).powi(2);
        prop_assert!(close(about_c.get(2).unwrap(), want, 1e-12));
    }

    #[test]
    fn weighted_moments_scale_with_phi(x in 30u64..4000, h in 2u64..30, num in 1i64..7, den in 1i64..5) {
        let set = SievingSet::squarefree();
        let phi = StepFunction::parse("0 1/3 1\n1/3 1 -1/2").unwrap();
        let c = Rational64::new(num, den);
        let base = weighted_moments(&set, x, h, &phi, &[2, 3, 4]).unwrap();
        let scaled = weighted_moments(&set, x, h, &phi.scaled(c), &[2, 3, 4]).unwrap();
        let cf = num as f64 / den as f64;
        for k in 2..=4u32 {
            let want = base.get(k).unwrap() * cf.powi(k as i32);
            prop_assert!(close(scaled.get(k).unwrap(), want, 1e-12), "k = {}", k);
        }
    }

    #[test]
    fn gap_bound_holds(set in sets(), x in 30u64..5000, h in 1u64..30, k in 1u32..3) {
        let hist = window_histogram(&set, x, h).unwrap();
        let centre = Center::density_window(&set, h).unwrap().value;
        prop_assert!(gap_moment_inequality(&hist, centre, k).unwrap());
    }

    #[test]
    fn indicator_weight_is_unweighted(set in sets(), x in 30u64..3000, h in 1u64..30) {
        let hist = window_histogram(&set, x, h).unwrap();
        let plain = empirical_moments(&hist, Center::density_window(&set, h).unwrap(), &[2, 3]).unwrap();
        let weighted = weighted_moments(&set, x, h, &StepFunction::indicator(), &[2, 3]).unwrap();
        for k in 2..=3 {
            prop_assert!(close(plain.get(k).unwrap(), weighted.get(k).unwrap(), 1e-12));
        }
    }
}
