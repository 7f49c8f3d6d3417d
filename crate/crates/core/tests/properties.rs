use num_bigint::BigInt;
use proptest::prelude::*;

use snowmetric::compacta::{hausdorff_distance, FinitePointSet};
use snowmetric::measure::Snowflake;
use snowmetric::product::{d_s, dil, f_map, f_map_layer, CubeIndex};
use snowmetric::quotient::{distance, DistanceOptions, HierarchicalSolver};
use snowmetric::shortcuts::{is_clean, is_shortcut_endpoint, related, shortcut_at, shortcuts_in_interval};
use snowmetric::{Dyadic, GridInterval, Shortcut, SnowflakeConfig};

fn line2() -> SnowflakeConfig {
    SnowflakeConfig::line(0.5, 2, 8.0).unwrap()
}

fn dyadic(bits: u32) -> impl Strategy<Value = Dyadic> {
    (-(1i64 << 20)..(1i64 << 20), 0..=bits).prop_map(|(n, k)| Dyadic::new(BigInt::from(n), k))
}

fn unit_dyadic(bits: u32) -> impl Strategy<Value = Dyadic> {
    (0..=(1i64 << bits)).prop_map(move |n| Dyadic::new(BigInt::from(n), bits))
}

proptest! {
    #[test]
    fn dyadic_arithmetic_is_exact(a in dyadic(30), b in dyadic(30)) {
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&a * &Dyadic::one(), a.clone());
        prop_assert_eq!(a.mul_pow2(7).mul_pow2(-7), a.clone());
        prop_assert_eq!(a.cmp(&b), a.to_f64().unwrap().partial_cmp(&b.to_f64().unwrap()).unwrap());
        let back: Dyadic = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a.clone());
        // canonical: an odd numerator unless the value is an integer
        prop_assert!(a.exponent() == 0 || a.numerator() % 2 != BigInt::from(0));
    }

    #[test]
    fn dyadic_floor_ceil_bracket(a in dyadic(20)) {
        let (f, c) = (Dyadic::new(a.floor(), 0), Dyadic::new(a.ceil(), 0));
        prop_assert!(f <= a && a <= c);
        prop_assert!(&c - &f <= Dyadic::one());
    }

    #[test]
    fn shortcut_endpoints_are_recognized(level in 1u32..6, m in 0i64..200) {
        let cfg = line2();
        let sc = Shortcut::new(&cfg, level, m);
        prop_assert_eq!(&sc.q - &sc.p, cfg.h_pow(level + 1));
        prop_assert!(is_shortcut_endpoint(&cfg, &sc.p) && is_shortcut_endpoint(&cfg, &sc.q));
        prop_assert!(related(&cfg, &sc.p, &sc.q) && related(&cfg, &sc.q, &sc.p));
        let (found, _) = shortcut_at(&cfg, &sc.q).unwrap();
        prop_assert_eq!(found, sc.clone());
        prop_assert_eq!(sc.partner(&sc.p), Some(&sc.q));
    }

    #[test]
    fn clean_cells_have_no_endpoint_at_their_ends(level in 0u32..5, m in -20i64..300) {
        let cfg = line2();
        let iv = GridInterval::new(level, m);
        let ends_hit = is_shortcut_endpoint(&cfg, &iv.left(&cfg)) || is_shortcut_endpoint(&cfg, &iv.right(&cfg));
        prop_assert_eq!(is_clean(&cfg, &iv), !ends_hit);
    }

    #[test]
    fn enumerated_shortcuts_meet_the_interval(a in unit_dyadic(8), b in unit_dyadic(8), depth in 1u32..4) {
        let cfg = line2();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let found = shortcuts_in_interval(&cfg, &lo, &hi, depth);
        let inside = |x: &Dyadic| lo <= *x && *x <= hi;
        for sc in &found {
            prop_assert!((inside(&sc.p) || inside(&sc.q)) && sc.level <= depth);
        }
        // filter a wider enumeration down to the interval
        let all = shortcuts_in_interval(&cfg, &Dyadic::from(-1), &Dyadic::from(2), depth);
        let expect = all.iter().filter(|sc| inside(&sc.p) || inside(&sc.q)).count();
        prop_assert_eq!(found.len(), expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quotient_distance_properties(x in unit_dyadic(10), y in unit_dyadic(10), level in 0u32..4) {
        let cfg = line2();
        let r = distance(&cfg, &x, &y, level, &DistanceOptions::default()).unwrap();
        let snow = (&x - &y).abs().to_f64().unwrap().sqrt();
        prop_assert!(r.value >= 0.0 && r.value <= snow);
        prop_assert_eq!(r.history[0], snow);
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        r.witness.validate(&cfg, &x, &y).unwrap();
        let back = distance(&cfg, &y, &x, level, &DistanceOptions::default()).unwrap();
        prop_assert!((r.value - back.value).abs() <= 1e-12);
        let hier = HierarchicalSolver::new(cfg, DistanceOptions::default()).value(&x, &y, level).unwrap();
        prop_assert!((r.value - hier).abs() <= 1e-12);
    }

    #[test]
    fn triangle_inequality(x in unit_dyadic(8), y in unit_dyadic(8), z in unit_dyadic(8)) {
        let solver = HierarchicalSolver::new(line2(), DistanceOptions::default());
        let v = |a: &Dyadic, b: &Dyadic| solver.value(a, b, 3).unwrap();
        prop_assert!(v(&x, &z) <= v(&x, &y) + v(&y, &z) + 1e-12);
    }

    #[test]
    fn dilation_scales_product_distance(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        y in prop::collection::vec(-2.0f64..2.0, 2),
        delta in 0.05f64..4.0,
    ) {
        let cfg = SnowflakeConfig::new(vec![0.5, 0.75], 2, 8.0).unwrap();
        let before = d_s(&cfg, &x, &y).unwrap();
        let after = d_s(&cfg, &dil(&cfg, delta, &x).unwrap(), &dil(&cfg, delta, &y).unwrap()).unwrap();
        prop_assert!((after - delta * before).abs() <= 1e-12 * (1.0 + before));
    }

    #[test]
    fn cube_maps_agree_on_layer(scale in 0u32..4, j in 0i64..16, t in unit_dyadic(6)) {
        let cfg = line2();
        let idx = CubeIndex::new(scale, vec![j]);
        let exact = f_map_layer(&cfg, &idx, 0, &t).to_f64().unwrap();
        let float = f_map(&cfg, &idx, &[t.to_f64().unwrap()]).unwrap()[0];
        prop_assert!((exact - float).abs() <= 1e-15);
    }

    #[test]
    fn hausdorff_distance_is_a_metric(
        a in prop::collection::vec(0.0f64..1.0, 1..10),
        b in prop::collection::vec(0.0f64..1.0, 1..10),
        c in prop::collection::vec(0.0f64..1.0, 1..10),
    ) {
        let m = Snowflake { s: 0.5 };
        let [a, b, c] = [a, b, c].map(|v| FinitePointSet::from_line(&v).unwrap());
        let ab = hausdorff_distance(&m, &a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff_distance(&m, &b, &a).unwrap());
        prop_assert_eq!(hausdorff_distance(&m, &a, &a).unwrap(), 0.0);
        let ac = hausdorff_distance(&m, &a, &c).unwrap();
        let bc = hausdorff_distance(&m, &b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}
