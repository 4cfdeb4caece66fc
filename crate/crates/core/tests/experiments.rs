use adaptive_milstein::harness::{
    backstop_probability, convergence_table, dyadic_range, efficiency_table, rms_error, run_method,
    reference_terminals, BackstopConfig, ExperimentConfig, Method, ERROR_TABLE_HEADER,
};
use adaptive_milstein::model::{make_builtin, BuiltinKind};
use adaptive_milstein::steppers::Scheme;

fn cheap(kind: BuiltinKind) -> (adaptive_milstein::model::BuiltinProblem, ExperimentConfig) {
    let config = ExperimentConfig {
        methods: vec![Method::Adaptive],
        h_max: dyadic_range(-8, -6),
        rho: 16.0,
        paths: 100,
        reference_exponent: 12,
        fine_exponent: 16,
        base_seed: 7,
        match_h_mean: true,
    };
    (make_builtin(kind), config)
}

#[test]
fn halving_h_max_halves_the_error_on_additive_noise() {
    let (p, mut config) = cheap(BuiltinKind::ScalarAdd);
    config.reference_exponent = 14;
    config.fine_exponent = 18;
    let (coarse, _) = rms_error(&p, &config, Method::Adaptive, 2f64.powi(-8)).unwrap();
    let (fine, _) = rms_error(&p, &config, Method::Adaptive, 2f64.powi(-9)).unwrap();
    let ratio = coarse / fine;
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn std_error_scales_with_inverse_root_of_paths() {
    let (p, mut config) = cheap(BuiltinKind::ScalarMult);
    let h = 2f64.powi(-6);
    let (_, se100) = rms_error(&p, &config, Method::Adaptive, h).unwrap();
    config.paths = 400;
    let (_, se400) = rms_error(&p, &config, Method::Adaptive, h).unwrap();
    let ratio = se100 / se400;
    assert!((1.4..=2.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn tables_do_not_depend_on_thread_count() {
    let (p, mut config) = cheap(BuiltinKind::TwodNoncommutative);
    config.paths = 30;
    config.methods = vec![Method::Adaptive, Method::Fixed(Scheme::Tamed)];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| convergence_table(&p, &config).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.table.without_timings(), three.table.without_timings());
    assert_eq!(one.slopes, three.slopes);
}

#[test]
fn h_mean_rows_are_sane() {
    let (p, mut config) = cheap(BuiltinKind::ScalarMult);
    config.paths = 40;
    config.methods = vec![Method::Adaptive, Method::Fixed(Scheme::Milstein)];
    let report = convergence_table(&p, &config).unwrap();
    let adaptive: Vec<_> = report.table.rows_for("adaptive").collect();
    for r in &adaptive {
        assert!(r.rms_error >= 0.0);
        assert!(r.h_mean >= r.h_max / config.rho && r.h_mean <= r.h_max);
        assert_eq!(r.divergent_count, 0);
    }
    for w in adaptive.windows(2) {
        assert!(w[0].h_mean < w[1].h_mean);
    }
    for (a, f) in adaptive.iter().zip(report.table.rows_for("milstein")) {
        assert_eq!(f.h_mean, f.h_max);
        assert!((f.h_max - a.h_mean).abs() <= config.resolution(1.0) / 2.0);
    }
    let csv = report.table.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(ERROR_TABLE_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 8);
    assert_eq!(first[0], "adaptive");
    assert_eq!(first[1], "3.9062500000000000e-3");
}

#[test]
fn smaller_fixed_steps_take_longer() {
    let (p, mut config) = cheap(BuiltinKind::TwodNoncommutative);
    config.paths = 200;
    config.reference_exponent = 8;
    config.fine_exponent = 12;
    let refs = reference_terminals(&p, &config).unwrap();
    let scheme = Method::Fixed(Scheme::Milstein);
    let coarse = run_method(&p, &config, scheme, 2f64.powi(-2), &refs).unwrap();
    let fine = run_method(&p, &config, scheme, 2f64.powi(-8), &refs).unwrap();
    assert!(fine.seconds > coarse.seconds, "{} vs {}", fine.seconds, coarse.seconds);
}

#[test]
fn efficiency_rows_pair_error_with_time() {
    let (p, mut config) = cheap(BuiltinKind::ScalarMult);
    config.paths = 10;
    let rows = efficiency_table(&p, &config).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.cpu_seconds > 0.0 && r.rms_error > 0.0));
}

#[test]
fn backstop_probability_declines_with_rho() {
    let p = make_builtin(BuiltinKind::ScalarProbe);
    let pts = backstop_probability(&p, &BackstopConfig::default()).unwrap();
    assert!(pts[0].prob > 0.0);
    assert_eq!(pts.last().unwrap().triggered_paths, 0);
    // the backstop fires near the start of the interval
    let first_stats = &pts[0].step_stats[0];
    assert_eq!(first_stats.count, 100);
    assert!(first_stats.backstop_count > 0);
}

#[test]
fn reference_divergence_is_an_error() {
    let params = [("x0".to_string(), 1e200)].into_iter().collect();
    let p = make_builtin(BuiltinKind::ScalarMult).with_parameters(&params).unwrap();
    let (_, mut config) = cheap(BuiltinKind::ScalarMult);
    config.paths = 2;
    assert!(reference_terminals(&p, &config).is_err());
}
