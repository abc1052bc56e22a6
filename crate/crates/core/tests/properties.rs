use proptest::prelude::*;

use transform_orders::expsum::{count_roots, sign_pattern, ExpSum, ScanOptions};
use transform_orders::orders::{dv_da, star_check, OrderOptions, SystemPair};
use transform_orders::systems::{inverse_survival, majorizes, survival, HazardVector};

fn exp_sum() -> impl Strategy<Value = ExpSum> {
    prop::collection::vec((0.0f64..8.0, -5.0f64..5.0), 1..=6)
        .prop_map(|raw| ExpSum::new(raw).unwrap())
        .prop_filter("nonzero", |f| !f.is_zero())
}

fn rates(n: usize) -> impl Strategy<Value = HazardVector> {
    prop::collection::vec(0.2f64..6.0, n).prop_map(|r| HazardVector::new(r).unwrap())
}

/// `(λ, θ)` with `(λ) ≺ (θ)`: spread a common sum further apart.
fn majorized_pair() -> impl Strategy<Value = (HazardVector, HazardVector)> {
    (0.5f64..5.0, 0.0f64..0.9, 0.0f64..1.0).prop_map(|(m, d, extra)| {
        let dl = d * m;
        let dt = dl + extra * (m - dl) * 0.95;
        (
            HazardVector::new(vec![m - dl, m + dl]).unwrap(),
            HazardVector::new(vec![m - dt, m + dt]).unwrap(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shift_scale_matches_direct_evaluation(f in exp_sum(), a in 0.1f64..3.0, b in 0.0f64..2.0, x in 0.0f64..5.0) {
        let g = f.shift_scale(a, b).unwrap();
        let direct = f.eval(a * x + b);
        let scale: f64 = f.terms().iter().map(|t| (t.coeff * (-t.rate * (a * x + b)).exp()).abs()).sum();
        prop_assert!((g.eval(x) - direct).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn root_count_within_bound(f in exp_sum()) {
        let c = count_roots(&f, f64::NEG_INFINITY, f64::INFINITY, &ScanOptions::default()).unwrap();
        prop_assert!(c.count <= c.bound);
        prop_assert!(c.total_real_roots <= f.sign_change_bound());
    }

    #[test]
    fn pattern_regions_within_bound(f in exp_sum()) {
        let p = sign_pattern(&f, &ScanOptions::default()).unwrap();
        prop_assert!(p.certain_signs().len() <= f.sign_change_bound() + 1);
        for r in p.certain_only().regions {
            prop_assert_eq!(transform_orders::expsum::Sign::of(f.eval(r.x)), r.sign);
        }
    }

    #[test]
    fn derivative_matches_finite_difference(f in exp_sum(), x in 0.1f64..4.0) {
        let h = 1e-5;
        let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
        let scale: f64 = f.terms().iter().map(|t| (t.rate * t.coeff * (-t.rate * x).exp()).abs()).sum();
        prop_assert!((f.derivative().eval(x) - fd).abs() <= 1e-6 * scale.max(1e-12));
    }

    #[test]
    fn majorization_reflexive_and_antisymmetric(l in rates(3), t in rates(3)) {
        prop_assert!(majorizes(&l, &l).unwrap());
        if majorizes(&l, &t).unwrap() && majorizes(&t, &l).unwrap() {
            prop_assert!(l.approx_eq(&t));
        }
    }

    #[test]
    fn survival_scales_with_rates(l in rates(3), k in 0.2f64..5.0, x in 0.0f64..3.0) {
        let s = survival(&l).unwrap();
        let sk = survival(&l.scaled(k).unwrap()).unwrap();
        prop_assert!((sk.eval(x / k) - s.eval(x)).abs() < 1e-12);
    }

    #[test]
    fn quantile_round_trip(l in rates(2), u in 0.001f64..1.0) {
        let s = survival(&l).unwrap();
        let x = inverse_survival(&s, u).unwrap();
        prop_assert!((s.eval(x) - u).abs() <= 1e-12);
    }

    #[test]
    fn dv_da_is_positive_and_consistent((l, t) in majorized_pair(), x in 0.01f64..5.0, a in 0.2f64..2.0, b in 0.0f64..1.0) {
        let d = dv_da(&l, x, a, b).unwrap();
        prop_assert!(d > 0.0);
        // Only F̄_X(ax + b) depends on a.
        let sx = SystemPair::new(&l, &t).unwrap().survival_x().clone();
        let g = |a: f64| -sx.eval(a * x + b);
        let h = 1e-4 * a;
        let fd = (8.0 * (g(a + h) - g(a - h)) - (g(a + 2.0 * h) - g(a - 2.0 * h))) / (12.0 * h);
        prop_assert!(((fd - d) / d).abs() <= 1e-6, "fd = {fd}, exact = {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn majorized_pairs_hold_star_order((l, t) in majorized_pair()) {
        prop_assume!(majorizes(&l, &t).unwrap());
        let v = star_check(&l, &t, &OrderOptions::default()).unwrap();
        prop_assert_eq!(v.status, transform_orders::orders::Status::Holds);
    }
}
