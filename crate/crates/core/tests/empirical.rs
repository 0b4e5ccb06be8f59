use proptest::prelude::*;
use tailcop::{rank_transform, EmpiricalDistribution64};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-5i32..5i32, -1000i32..1000].prop_map(|k| k as f64 * 0.25), 1..60)
}

proptest! {
    #[test]
    fn ecdf_is_monotone_step(s in sample(), a in -300.0f64..300.0, b in -300.0f64..300.0) {
        let f = EmpiricalDistribution64::new(&s).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(f.ecdf(lo) <= f.ecdf(hi));
        prop_assert_eq!(f.ecdf(f.max()), 1.0);
        prop_assert_eq!(f.ecdf(f.min() - 1.0), 0.0);
    }

    #[test]
    fn quantile_is_generalised_inverse(s in sample(), u in 0.0f64..=1.0) {
        let f = EmpiricalDistribution64::new(&s).unwrap();
        let q = f.quantile(u).unwrap();
        prop_assert!(s.contains(&q));
        prop_assert!(f.ecdf(q) >= u);
        for &x in &s {
            if x < q {
                prop_assert!(f.ecdf(x) < u);
            }
        }
    }

    #[test]
    fn quantile_ratio_matches_brute_force(s in sample(), den in 1usize..12, num_frac in 0.0f64..=1.0) {
        let num = (num_frac * den as f64).floor() as usize;
        let f = EmpiricalDistribution64::new(&s).unwrap();
        let expected = tailcop_oracle::quantile_ratio(&s, num as u64, den as u64);
        prop_assert_eq!(f.quantile_ratio(num, den), expected);
    }

    #[test]
    fn ranks_ignore_monotone_maps(s in sample()) {
        let mapped: Vec<f64> = s.iter().map(|x| x.powi(3) + x).collect();
        prop_assert_eq!(rank_transform(&s).unwrap(), rank_transform(&mapped).unwrap());
    }
}

#[test]
fn rejects_empty_and_nan() {
    assert!(EmpiricalDistribution64::new(&[]).is_err());
    assert!(EmpiricalDistribution64::new(&[1.0, f64::NAN]).is_err());
    let f = EmpiricalDistribution64::new(&[1.0, 2.0]).unwrap();
    assert!(f.quantile(1.5).is_err());
    assert!(f.quantile(-0.1).is_err());
}
