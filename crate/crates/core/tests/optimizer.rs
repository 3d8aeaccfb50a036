use bellkit_core::rational::to_f64;
use bellkit_core::{builtin, expression_value, ghz_state, optimize_measurements, OptimizerConfig, QuantumState};

fn ghz() -> QuantumState {
    ghz_state(3).unwrap().into()
}

fn config(restarts: usize, seed: u64) -> OptimizerConfig {
    OptimizerConfig { restarts, seed, ..OptimizerConfig::default() }
}

#[test]
fn same_seed_same_result_across_thread_counts() {
    let g = builtin("g-paper").unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| optimize_measurements(&g.expression, g.mode, &ghz(), &config(4, 99)).unwrap())
    };
    let one = run(1);
    let many = run(4);
    assert_eq!(one, many);
    assert_eq!(one.best_value.to_bits(), many.best_value.to_bits());
}

#[test]
fn best_value_grows_with_restarts() {
    let m = builtin("mermin").unwrap();
    let mut previous = f64::NEG_INFINITY;
    for restarts in 1..=4 {
        let mut c = config(restarts, 5);
        c.include_fixed_start = false;
        let r = optimize_measurements(&m.expression, m.mode, &ghz(), &c).unwrap();
        assert!(r.best_value >= previous, "{} < {previous}", r.best_value);
        previous = r.best_value;
    }
}

#[test]
fn never_exceeds_coefficient_ceiling() {
    let g = builtin("g-paper").unwrap();
    let ceiling: f64 = g.expression.to_probability().terms().map(|(_, c)| to_f64(c)).filter(|c| *c > 0.0).sum();
    assert_eq!(ceiling, 24.0);
    let r = optimize_measurements(&g.expression, g.mode, &ghz(), &config(6, 1)).unwrap();
    assert!(r.best_value <= ceiling);
    assert!(r.starts.iter().all(|s| s.value <= ceiling));
}

#[test]
fn best_value_is_reevaluated_at_best_angles() {
    let g = builtin("g-paper").unwrap();
    let r = optimize_measurements(&g.expression, g.mode, &ghz(), &config(3, 2)).unwrap();
    let v = expression_value(&g.expression, &ghz(), &r.best_angles.to_model()).unwrap().value;
    assert!((v - r.best_value).abs() <= 1e-12);
    for party in r.best_angles.angles() {
        for &(theta, phi) in party {
            assert!((0.0..=std::f64::consts::PI).contains(&theta));
            assert!((0.0..std::f64::consts::TAU).contains(&phi));
        }
    }
}
