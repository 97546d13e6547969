use eberhard::inequality::j_poisson_sigma;
use eberhard::io::{load_events, save_events, BlockEvents};
use eberhard::model::predict_counts;
use eberhard::sim::{
    count_coincidences, simulate_experiment, simulate_experiment_blocks, tau_c_ns, IntensityProfile, Schedule, SimSeed,
};
use eberhard::{eberhard_j, Combo, ExperimentConfig};

#[test]
fn full_scale_quantum_run_matches_the_model_j() {
    let cfg = ExperimentConfig::paper();
    let model = predict_counts(&cfg).unwrap();
    let d = simulate_experiment(&cfg, &Schedule::new(5, 60.0), &IntensityProfile::flat(), SimSeed(7)).unwrap();
    let total = d.accumulated().unwrap();
    let j = eberhard_j(&total) as f64;
    let sigma = j_poisson_sigma(&total);
    assert!(
        (j - model.j).abs() <= 5.0 * sigma,
        "J = {j}, model {}, sigma {sigma}",
        model.j
    );
    assert!(j < -10.0 * sigma);
}

#[test]
fn simulated_singles_are_poisson_around_the_model() {
    let seconds = 0.5;
    let cfg = ExperimentConfig::paper();
    let expected = predict_counts(&ExperimentConfig { t: seconds, ..cfg })
        .unwrap()
        .observed;
    let seeds: Vec<u64> = (100..132).collect();
    let runs: Vec<_> = seeds
        .iter()
        .map(|&s| simulate_experiment(&cfg, &Schedule::new(1, seconds), &IntensityProfile::flat(), SimSeed(s)).unwrap())
        .collect();
    let n = runs.len() as f64;
    for combo in Combo::SEQUENCE {
        for (party, mu) in [("A", expected.block(combo).s_a), ("B", expected.block(combo).s_b)] {
            let xs: Vec<f64> = runs
                .iter()
                .map(|d| {
                    let b = d.rounds[0].counts.block(combo);
                    (if party == "A" { b.s_a } else { b.s_b }) as f64
                })
                .collect();
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            // Mean within 4 standard errors; dispersion index near 1.
            assert!(
                (mean - mu).abs() <= 4.0 * (mu / n).sqrt(),
                "{combo} {party}: {mean} vs {mu}"
            );
            let dispersion = var / mu;
            assert!(
                (0.4..2.0).contains(&dispersion),
                "{combo} {party}: dispersion {dispersion}"
            );
        }
    }
}

#[test]
fn rate_multiplier_and_pair_rate_are_interchangeable() {
    let cfg = ExperimentConfig::paper();
    let s = Schedule::new(1, 0.3);
    let flat = simulate_experiment(&cfg, &s, &IntensityProfile::flat(), SimSeed(3)).unwrap();
    let mut profile = IntensityProfile::flat();
    for combo in Combo::SEQUENCE {
        profile = profile.with_multiplier(combo, 2.0);
    }
    let half = ExperimentConfig {
        r0: cfg.r0 / 2.0,
        ..cfg
    };
    let doubled = simulate_experiment(&half, &s, &profile, SimSeed(3)).unwrap();
    assert_eq!(flat.round_counts(), doubled.round_counts());
}

#[test]
fn saved_events_recount_to_the_same_coincidences() {
    let cfg = ExperimentConfig::paper();
    let (blocks, d) =
        simulate_experiment_blocks(&cfg, &Schedule::new(2, 0.25), &IntensityProfile::flat(), SimSeed(21)).unwrap();
    let logs: Vec<BlockEvents> = blocks
        .iter()
        .map(|b| BlockEvents {
            id: b.id,
            streams: b.streams.clone(),
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.csv");
    save_events(&path, &logs).unwrap();
    let back = load_events(&path).unwrap();
    assert_eq!(back, logs);
    let tau = tau_c_ns(cfg.tau_c);
    for b in &back {
        let counts = d.rounds[b.id.round as usize - 1].counts.block(b.id.combo);
        assert_eq!(
            count_coincidences(&b.streams.a, &b.streams.b, tau).unwrap(),
            counts.c_oo
        );
        assert_eq!(b.streams.a.len() as u64, counts.s_a);
        assert_eq!(b.streams.b.len() as u64, counts.s_b);
    }
}

#[test]
fn linear_drift_is_removed_by_normalization() {
    use eberhard::drift::{j_prime, j_prime_sigma, BaselinePolicy, NormalizationPath};
    use eberhard::sim::Drift;
    let cfg = ExperimentConfig::paper();
    let profile = IntensityProfile {
        drift: Drift::Linear {
            slope_per_second: -1e-3,
        },
        ..IntensityProfile::flat()
    };
    let d = simulate_experiment(&cfg, &Schedule::new(1, 20.0), &profile, SimSeed(11)).unwrap();
    let r = &d.round_counts()[0];
    let path = NormalizationPath::sequence();
    let factors = eberhard::drift::compute_factors(r, &path, BaselinePolicy::FixedCombo(Combo::A1B1)).unwrap();
    // Later blocks see less intensity.
    assert!(factors.get(Combo::A2B1) < factors.get(Combo::A1B1));
    let model = predict_counts(&ExperimentConfig { t: 20.0, ..cfg }).unwrap();
    let jp = j_prime(r, &path, BaselinePolicy::FixedCombo(Combo::A1B1)).unwrap();
    let sigma = j_prime_sigma(r, &path, BaselinePolicy::FixedCombo(Combo::A1B1)).unwrap();
    assert!(
        (jp - model.j).abs() < 5.0 * sigma + 0.01 * model.j.abs(),
        "J' {jp} vs {}",
        model.j
    );
}
