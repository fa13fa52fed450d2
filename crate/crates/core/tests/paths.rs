use pathwise::verify::stats::ks_one_sample;
use pathwise::{eval_path, make_uniform_grid, refine_bridge, sample_brownian, PathKind, RngSpec, SamplePath};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn fixed_cell_increments_are_standard_normal() {
    let grid = make_uniform_grid(2.0, 64).unwrap();
    let cell = 37;
    let dt = grid.times()[cell + 1] - grid.times()[cell];
    let z: Vec<f64> = (0..100_000u64)
        .map(|k| {
            let p = sample_brownian(&grid, RngSpec::new(11, k));
            (p.values()[cell + 1] - p.values()[cell]) / dt.sqrt()
        })
        .collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let d = ks_one_sample(&z, |x| normal.cdf(x));
    assert!(d <= 0.01, "KS distance {d}");
}

#[test]
fn refined_midpoints_follow_the_bridge_law() {
    // Midpoint of [0, 1] given B_0 = 0 and B_1 = v is N(v/2, 1/4).
    let grid = make_uniform_grid(1.0, 1).unwrap();
    let z: Vec<f64> = (0..50_000u64)
        .map(|k| {
            let p = sample_brownian(&grid, RngSpec::new(5, k));
            let r = refine_bridge(&p, 0.0, 1.0, 1, RngSpec::new(6, k)).unwrap();
            (r.values()[1] - 0.5 * r.values()[2]) / 0.5
        })
        .collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let d = ks_one_sample(&z, |x| normal.cdf(x));
    assert!(d <= 0.012, "KS distance {d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_stream_same_bytes(seed in any::<u64>(), stream in any::<u64>(), n in 1usize..200) {
        let grid = make_uniform_grid(1.5, n).unwrap();
        let a = sample_brownian(&grid, RngSpec::new(seed, stream));
        let b = sample_brownian(&grid, RngSpec::new(seed, stream));
        let bits = |p: &SamplePath| p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn refinement_keeps_every_original_node(
        seed in any::<u64>(),
        n in 1usize..50,
        levels in 1u32..4,
        lo in 0.0f64..1.0,
        len in 0.0f64..1.0,
    ) {
        let grid = make_uniform_grid(1.0, n).unwrap();
        let p = sample_brownian(&grid, RngSpec::new(seed, 0));
        let hi = (lo + len).min(1.0);
        prop_assume!(hi > lo);
        let r = refine_bridge(&p, lo, hi, levels, RngSpec::new(seed, 1)).unwrap();
        for (&t, &v) in p.times().iter().zip(p.values()) {
            prop_assert_eq!(eval_path(&r, t).unwrap(), v);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(seed in any::<u64>(), n in 1usize..100) {
        let grid = make_uniform_grid(3.0, n).unwrap();
        let p = sample_brownian(&grid, RngSpec::new(seed, 2));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = SamplePath::read_csv(buf.as_slice(), PathKind::Driver).unwrap();
        prop_assert_eq!(p.times(), q.times());
        prop_assert_eq!(p.values(), q.values());
    }
}
