use cgm_hypo::stats::{
    f_cdf, f_test, normal_cdf, normal_quantile, shapiro_wilk, student_t_cdf, t_test_unpaired,
};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal, StudentsT};

#[test]
fn cdfs_match_statrs_on_grid() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for i in -80..=80 {
        let x = i as f64 * 0.1;
        assert!((normal_cdf(x) - normal.cdf(x)).abs() < 1e-8, "normal {x}");
    }
    for nu in [1.0, 2.0, 3.5, 9.0, 18.0, 30.0, 120.0] {
        let t = StudentsT::new(0.0, 1.0, nu).unwrap();
        for i in -60..=60 {
            let x = i as f64 * 0.15;
            let ours = student_t_cdf(x, nu).unwrap();
            assert!((ours - t.cdf(x)).abs() < 1e-8, "t {x} {nu}");
        }
    }
    for (d1, d2) in [(1.0, 1.0), (1.0, 5.0), (3.0, 12.0), (9.0, 9.0), (7.0, 2.0), (20.0, 40.0)] {
        let f = FisherSnedecor::new(d1, d2).unwrap();
        for i in 1..=80 {
            let x = i as f64 * 0.08;
            let ours = f_cdf(x, d1, d2).unwrap();
            assert!((ours - f.cdf(x)).abs() < 1e-8, "f {x} {d1} {d2}");
        }
    }
}

#[test]
fn quantile_inverts_statrs_cdf() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let z = normal_quantile(p);
        assert!((normal_cdf(z) - p).abs() < 1e-12, "{p}");
        assert!((normal.cdf(z) - p).abs() < 1e-9, "{p}");
    }
}

fn sample(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn p_values_in_unit_interval(a in sample(3..=50), b in sample(3..=50)) {
        let sw = shapiro_wilk(&a).unwrap();
        prop_assert!((0.0..=1.0).contains(&sw.p_value));
        prop_assert!(sw.statistic > 0.0 && sw.statistic <= 1.0);
        let f = f_test(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.p_value));
        for pooled in [true, false] {
            let t = t_test_unpaired(&a, &b, pooled).unwrap();
            prop_assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn t_test_symmetry(a in sample(2..=20), b in sample(2..=20)) {
        for pooled in [true, false] {
            let ab = t_test_unpaired(&a, &b, pooled).unwrap();
            let ba = t_test_unpaired(&b, &a, pooled).unwrap();
            prop_assert!((ab.statistic + ba.statistic).abs() <= 1e-12 * ab.statistic.abs().max(1.0));
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        }
    }

    #[test]
    fn f_test_symmetry(a in sample(2..=20), b in sample(2..=20)) {
        let ab = f_test(&a, &b).unwrap();
        let ba = f_test(&b, &a).unwrap();
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-9);
    }

    #[test]
    fn shapiro_affine_invariant(a in sample(3..=50), shift in -1e3f64..1e3, scale in 0.01f64..100.0) {
        let moved: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
        let w0 = shapiro_wilk(&a).unwrap().statistic;
        let w1 = shapiro_wilk(&moved).unwrap().statistic;
        prop_assert!((w0 - w1).abs() < 1e-9);
    }

    #[test]
    fn cdfs_monotone(nu in 1.0f64..60.0, nu2 in 1.0f64..60.0, start in -10.0f64..10.0) {
        let mut prev_t = 0.0;
        let mut prev_n = 0.0;
        let mut prev_f = 0.0;
        for i in 0..50 {
            let x = start + i as f64 * 0.2;
            let t = student_t_cdf(x, nu).unwrap();
            let n = normal_cdf(x);
            prop_assert!(t >= prev_t - 1e-15 && n >= prev_n - 1e-15);
            prop_assert!((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&n));
            prev_t = t;
            prev_n = n;
        }
        for i in 0..50 {
            let f = f_cdf(i as f64 * 0.25, nu, nu2).unwrap();
            prop_assert!(f >= prev_f - 1e-15);
            prev_f = f;
        }
    }
}

