use pathwise::verify::{brownian_driver, small_driver, SmallShape};
use pathwise::{
    bridge_solution, construct_ce1, construct_ce2, residual_sup, solve_pathwise, Ce1Branch, Ce2Variant, DriftSpec,
    Error, ResidualOptions, RngSpec, Side, SolveOptions, Start,
};
use proptest::prelude::*;

fn coarse() -> SolveOptions {
    SolveOptions::default().with_h_base(1.0 / 2048.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_drift_is_affine_in_the_driver(seed in any::<u64>(), c in -5.0f64..5.0, x0 in -3.0f64..3.0) {
        let d = brownian_driver(2.0, 256, RngSpec::new(seed, 0));
        let sol = solve_pathwise(&DriftSpec::Constant { value: c }, &d, x0, (0.0, 2.0), &coarse()).unwrap();
        for (&t, &x) in sol.times().iter().zip(sol.values()) {
            let exact = x0 + c * t + d.eval(t).unwrap();
            prop_assert!((x - exact).abs() <= 1e-12, "t = {t}: {x} vs {exact}");
        }
    }

    #[test]
    fn solution_grid_contains_the_driver_grid(seed in any::<u64>(), y in 0.5f64..3.0) {
        let d = brownian_driver(1.0, 128, RngSpec::new(seed, 1));
        let sol = bridge_solution(Side::Above, y, &d, &coarse()).unwrap();
        for t in d.times() {
            prop_assert!(sol.times().binary_search_by(|s| s.total_cmp(t)).is_ok(), "missing node {t}");
        }
    }

    #[test]
    fn bes3_stays_strictly_above_its_center(seed in any::<u64>(), center in -2.0f64..2.0) {
        let d = brownian_driver(1.0, 512, RngSpec::new(seed, 2));
        let spec = DriftSpec::Bes3 { center, side: Side::Above };
        let sol = solve_pathwise(&spec, &d, Start::new(center, Side::Above), (0.0, 1.0), &coarse()).unwrap();
        prop_assert!(sol.values()[1..].iter().all(|&x| x > center));
    }

    #[test]
    fn bridges_pin_and_keep_their_sign(seed in any::<u64>(), y in 0.5f64..3.0, below in any::<bool>()) {
        let side = if below { Side::Below } else { Side::Above };
        let d = brownian_driver(1.0, 1024, RngSpec::new(seed, 3));
        let sol = bridge_solution(side, y, &d, &SolveOptions::default()).unwrap();
        prop_assert!((sol.final_value() - side.sign() * y).abs() <= 1e-2);
        for (&t, &x) in sol.times().iter().zip(sol.values()) {
            if t > 1e-3 {
                prop_assert_eq!(Side::of(x, 0.0), Some(side));
            }
        }
    }

    #[test]
    fn small_drivers_keep_the_bridge_below_two(seed in any::<u64>(), k in 0u64..4, amp in 0.01f64..0.16) {
        let d = small_driver(SmallShape::cycle(k), amp, 1024, RngSpec::new(seed, k));
        let sol = bridge_solution(Side::Above, 1.0, &d, &coarse()).unwrap();
        prop_assert!(sol.values().iter().all(|&x| x < 2.0));
    }

    #[test]
    fn ce1_auto_is_valid(seed in any::<u64>()) {
        let d = brownian_driver(3.0, 1024, RngSpec::new(seed, 4));
        let inc = d.eval(2.0).unwrap() - d.eval(1.0).unwrap();
        let opts = SolveOptions::default();
        match construct_ce1(&d, Ce1Branch::Auto, &opts) {
            Ok(sol) => {
                let r = residual_sup(&DriftSpec::Ce1, &sol.path, &d, (0.0, 3.0), &ResidualOptions::from(&opts)).unwrap();
                prop_assert!(r.sup <= 5e-3);
                prop_assert!((sol.eval(1.0).unwrap().abs() - 1.0).abs() <= 1e-2);
                for (&t, &x) in sol.times().iter().zip(sol.values()) {
                    if t >= 2.0 {
                        prop_assert!(x.abs() > 1.0);
                    }
                }
            }
            Err(Error::DegenerateIncrement { .. }) => prop_assert!(inc.abs() < 1e-6 || (inc.abs() - 2.0).abs() < 1e-6),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn ce2_solutions_differ_by_four_at_one(seed in any::<u64>()) {
        let d = brownian_driver(4.0, 1024, RngSpec::new(seed, 5));
        let opts = SolveOptions::default();
        let w = construct_ce2(&d, Ce2Variant::Weak, &opts).unwrap();
        let a = construct_ce2(&d, Ce2Variant::Alternative, &opts).unwrap();
        prop_assert!((a.eval(1.0).unwrap() - w.eval(1.0).unwrap() - 4.0).abs() <= 2e-2);
        prop_assert!(w.values().iter().skip(1).all(|&x| x < 0.0));
    }
}
