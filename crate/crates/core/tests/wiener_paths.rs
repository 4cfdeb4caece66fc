use adaptive_milstein::harness::{levy_moment_check, sample_levy_areas};
use adaptive_milstein::stats::{fit_log2_slope, MeanVar};
use adaptive_milstein::wiener::{generate_path, moment_constant, WienerPath};
use proptest::prelude::*;

#[test]
fn fine_increments_have_the_gaussian_law() {
    let path = generate_path(11, 17, 2, 1.0).unwrap();
    let h = path.resolution();
    for c in 0..2 {
        let inc = path.increments(c);
        assert_eq!(inc.len(), 1 << 17);
        let mean: MeanVar = inc.iter().copied().collect();
        assert!(mean.mean().abs() <= 4.0 * mean.std_error(), "mean {}", mean.mean());
        let var: MeanVar = inc.iter().map(|x| x * x).collect();
        assert!((var.mean() - h).abs() <= 4.0 * var.std_error(), "var {} vs {h}", var.mean());
    }
}

#[test]
fn terminal_value_has_variance_t() {
    let finals: MeanVar = (0..10_000u64)
        .map(|s| {
            let p = generate_path(s, 4, 1, 1.0).unwrap();
            let w = p.value(0, p.num_steps());
            assert_eq!(w, p.increments(0).iter().sum::<f64>());
            w * w
        })
        .collect();
    assert!((finals.mean() - 1.0).abs() <= 4.0 * finals.std_error(), "{}", finals.mean());
}

#[test]
fn distinct_seeds_are_uncorrelated() {
    let xs: Vec<f64> = (0..4000u64).map(|s| generate_path(s, 2, 1, 1.0).unwrap().value(0, 4)).collect();
    let prod: MeanVar = xs.windows(2).map(|w| w[0] * w[1]).collect();
    assert!(prod.mean().abs() <= 4.0 * prod.std_error());
}

#[test]
fn levy_area_moments_match_constants() {
    let areas = sample_levy_areas(10_000, 10, 5).unwrap();
    let checks = levy_moment_check(&areas, 4).unwrap();
    for c in &checks {
        assert!(c.pass, "{c:?}");
    }
    // the second moment against the exact constant, scaled by h^2 = 1
    let i2 = moment_constant(2).unwrap().signed_f64();
    assert!((checks[1].estimate - i2).abs() <= 4.0 * checks[1].std_error);
}

#[test]
fn levy_area_scales_with_window_length() {
    // over windows of length 1/4 the second moment is I_2 / 16
    let sq: MeanVar = (0..4000u64)
        .map(|s| {
            let p = generate_path(s, 10, 2, 1.0).unwrap();
            let a = p.integrals_over(0, 256).unwrap().levy[(0, 1)];
            a * a
        })
        .collect();
    assert!((sq.mean() - 0.25 / 16.0).abs() <= 4.0 * sq.std_error(), "{}", sq.mean());
}

fn whole_area(p: &WienerPath) -> f64 {
    p.integrals_over(0, p.num_steps()).unwrap().levy[(0, 1)]
}

#[test]
fn refinement_error_decays_with_order_one_half() {
    let mut points = Vec::new();
    for level in [4u32, 6, 8] {
        let sq: MeanVar = (0..1000u64)
            .map(|s| {
                let coarse = generate_path(s, level, 2, 1.0).unwrap();
                let fine = coarse.refine(4).unwrap();
                let d = whole_area(&coarse) - whole_area(&fine);
                d * d
            })
            .collect();
        points.push((2f64.powi(-(level as i32)), sq.mean().sqrt()));
    }
    let slope = fit_log2_slope(&points).unwrap();
    assert!((0.4..=0.6).contains(&slope), "slope {slope}, points {points:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn increments_are_additive(seed in 0u64..1000, a in 0usize..256, b in 0usize..256, c in 0usize..256) {
        let mut idx = [a, b + 1, c + 2];
        idx.sort();
        prop_assume!(idx[0] < idx[1] && idx[1] < idx[2]);
        let p = generate_path(seed, 9, 2, 1.0).unwrap();
        let whole = p.integrals_over(idx[0], idx[2]).unwrap();
        let left = p.integrals_over(idx[0], idx[1]).unwrap();
        let right = p.integrals_over(idx[1], idx[2]).unwrap();
        for i in 0..2 {
            prop_assert_eq!(whole.dw[i], left.dw[i] + right.dw[i]);
        }
    }

    #[test]
    fn window_identities_hold_exactly(seed in 0u64..1000, a in 0usize..1024, len in 1usize..1024) {
        let p = generate_path(seed, 10, 3, 2.0).unwrap();
        let end = (a + len).min(p.num_steps());
        prop_assume!(a < end);
        let w = p.integrals_over(a, end).unwrap();
        prop_assert_eq!(w.h, (end - a) as f64 * p.resolution());
        for i in 0..3 {
            prop_assert_eq!(w.iterated[(i, i)], (w.dw[i] * w.dw[i] - w.h) / 2.0);
            prop_assert_eq!(w.levy[(i, i)], 0.0);
            for j in 0..3 {
                if i != j {
                    prop_assert_eq!(w.iterated[(i, j)] + w.iterated[(j, i)], w.dw[i] * w.dw[j]);
                    prop_assert_eq!(w.levy[(i, j)], -w.levy[(j, i)]);
                    prop_assert_eq!(w.levy[(i, j)], (w.iterated[(i, j)] - w.iterated[(j, i)]) / 2.0);
                }
            }
        }
    }

    #[test]
    fn refinement_keeps_coarse_windows(seed in 0u64..1000, a in 0usize..64, len in 1usize..64) {
        let coarse = generate_path(seed, 6, 2, 1.0).unwrap();
        let fine = coarse.refine(3).unwrap();
        let end = (a + len).min(64);
        prop_assume!(a < end);
        let wc = coarse.integrals_over(a, end).unwrap();
        let wf = fine.integrals_over(8 * a, 8 * end).unwrap();
        prop_assert_eq!(wc.dw, wf.dw);
        prop_assert_eq!(wc.h, wf.h);
    }
}
