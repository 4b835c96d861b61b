use std::collections::HashMap;

use rand::Rng;

use shared_mac::activation::{
    make_deterministic_partition, make_general_random, make_regular_circle, parse_pmf,
    to_pmf_string, ActiveSetSampler, ParseOptions, TEN_SENSOR_DISTANCES,
};
use shared_mac::bandit::{train, LearningSchedule, TrainingConfig, TrainingState};
use shared_mac::exact::brute_force_optimal;
use shared_mac::model::{
    expected_success_deterministic, expected_success_mixed, monte_carlo_success, ActiveSet,
    DeterministicStrategy, MixedStrategy,
};
use shared_mac::rng::rng_from_seed;

fn dist_weight(u: usize, v: usize) -> f64 {
    let d = (u + 10 - v) % 10;
    match d.min(10 - d) {
        0 | 5 => 0.0,
        d => TEN_SENSOR_DISTANCES[d - 1],
    }
}

/// Ordered three-pick process written out directly: first node uniform,
/// second by distance from the first, third by distance from the second
/// among the nodes not yet picked.
#[test]
fn regular_triples_match_sequential_picks() {
    let mut oracle: HashMap<Vec<usize>, f64> = HashMap::new();
    for f in 0..10 {
        for s in 0..10 {
            let p2 = 0.1 * dist_weight(f, s);
            if p2 == 0.0 {
                continue;
            }
            let norm: f64 = (0..10)
                .filter(|&t| t != f && t != s)
                .map(|t| dist_weight(s, t))
                .sum();
            for t in (0..10).filter(|&t| t != f && t != s) {
                let p = p2 * dist_weight(s, t) / norm;
                if p > 0.0 {
                    let mut key = vec![f, s, t];
                    key.sort_unstable();
                    *oracle.entry(key).or_default() += p;
                }
            }
        }
    }
    let pmf = make_regular_circle(10, 3).unwrap();
    assert_eq!(pmf.support().len(), oracle.len());
    for (set, p) in pmf.support() {
        let want = oracle[set.members()];
        assert!((p - want).abs() < 1e-12, "{set}: {p} vs {want}");
    }
    assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn regular_pairs_depend_on_distance_only() {
    let pmf = make_regular_circle(10, 2).unwrap();
    for u in 0..10 {
        for v in u + 1..10 {
            let p = pmf.probability(&ActiveSet::new(vec![u, v]).unwrap());
            assert!((p - 0.2 * dist_weight(u, v)).abs() < 1e-15);
        }
    }
    for m in pmf.marginals() {
        assert!((m - 0.2).abs() < 1e-12);
    }
}

fn frequency(
    pmf: &shared_mac::model::ActivationPmf,
    target: &[usize],
    draws: usize,
    seed: u64,
) -> f64 {
    let sampler = ActiveSetSampler::new(pmf);
    let mut rng = rng_from_seed(seed);
    let hits = (0..draws)
        .filter(|_| sampler.sample(&mut rng).members() == target)
        .count();
    hits as f64 / draws as f64
}

#[test]
fn sampling_frequencies() {
    let pairs = make_deterministic_partition(10, 2).unwrap();
    assert!((frequency(&pairs, &[0, 1], 100_000, 1) - 0.2).abs() < 0.01);
    let regular = make_regular_circle(10, 2).unwrap();
    assert!((frequency(&regular, &[0, 1], 100_000, 2) - 0.055).abs() < 0.005);
}

#[test]
fn pmf_text_round_trip_is_exact() {
    for seed in 0..5 {
        let pmf = make_general_random(8, 3, seed).unwrap();
        let back = parse_pmf(&to_pmf_string(&pmf), ParseOptions::default()).unwrap();
        assert_eq!(back, pmf);
    }
    let regular = make_regular_circle(10, 3).unwrap();
    let back = parse_pmf(&to_pmf_string(&regular), ParseOptions::default()).unwrap();
    assert_eq!(back, regular);
}

#[test]
fn monte_carlo_tracks_exact_value() {
    let mut rng = rng_from_seed(77);
    for case in 0..10u64 {
        let pmf = make_general_random(6, 2 + (case as usize % 2), case).unwrap();
        let rows = (0..6)
            .map(|_| {
                let w: Vec<f64> = (0..4).map(|_| rng.random::<f64>() + 0.01).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let phi = MixedStrategy::new(rows, 2).unwrap();
        let exact = expected_success_mixed(&phi, &pmf).unwrap();
        let mc = monte_carlo_success(&phi, &pmf, 50_000, case).unwrap();
        assert!(
            (mc.estimate - exact).abs() <= 3.0 * mc.std_error.max(1e-9),
            "case {case}: {} vs {exact}",
            mc.estimate
        );
    }
}

#[test]
fn robbins_monro_conditions() {
    for beta in [0.6, 0.8, 1.0] {
        let s = LearningSchedule::new(beta).unwrap();
        let (sum, sum_sq) = (1..=1_000_000u64).fold((0.0, 0.0), |(a, b), k| {
            let r = s.rate(k);
            (a + r, b + r * r)
        });
        // divergent first sum; the second stays under its integral bound
        assert!(sum > 13.0, "beta {beta}: {sum}");
        assert!(
            sum_sq < 1.0 + 1.0 / (2.0 * beta - 1.0),
            "beta {beta}: {sum_sq}"
        );
    }
    assert!(LearningSchedule::new(0.5).is_err());
    assert!(LearningSchedule::new(1.01).is_err());
}

#[test]
fn only_the_designated_sensor_learns() {
    let pmf = make_regular_circle(10, 2).unwrap();
    let sampler = ActiveSetSampler::new(&pmf);
    let mut state = TrainingState::new(10, 2, TrainingConfig::default(), 3).unwrap();
    for _ in 0..500 {
        let before = state.tables().to_vec();
        let out = state.turn(&sampler);
        for (s, (old, new)) in before.iter().zip(state.tables()).enumerate() {
            if s != out.designated || out.explored.is_none() {
                assert_eq!(old, new, "sensor {s} changed");
            }
        }
        if out.explored.is_some() {
            assert!(out.active.contains(out.designated));
        }
    }
    assert_eq!(state.turns(), 500);
}

#[test]
fn lost_acks_drive_estimates_to_zero() {
    let pmf = make_deterministic_partition(4, 2).unwrap();
    let sampler = ActiveSetSampler::new(&pmf);
    let config = TrainingConfig {
        ack_loss_prob: 1.0,
        ..TrainingConfig::default()
    };
    let mut state = TrainingState::new(4, 1, config, 9).unwrap();
    for _ in 0..400 {
        state.round(&sampler);
    }
    for t in state.tables() {
        for (&v, &k) in t.values().iter().zip(t.visits()) {
            assert!(k > 0);
            assert_eq!(v, 0.0);
        }
    }
    assert_eq!(state.empirical_success(), 0.0);
}

#[test]
fn curve_never_exceeds_optimum() {
    for seed in 0..4 {
        let pmf = make_general_random(7, 3, seed).unwrap();
        let best = brute_force_optimal(&pmf, 2).unwrap().value;
        let config = TrainingConfig {
            max_rounds: 300,
            patience: 0,
            ..TrainingConfig::default()
        };
        let out = train(&pmf, 2, &config, seed).unwrap();
        assert_eq!(out.curve.points.len(), 300);
        assert!(out
            .curve
            .points
            .iter()
            .all(|p| p.exact_success <= best + 1e-12));
        assert_eq!(
            out.value,
            expected_success_deterministic(&out.strategy, &pmf).unwrap()
        );
        assert!(!out.converged);
    }
}

#[test]
fn training_is_reproducible() {
    let pmf = make_regular_circle(10, 3).unwrap();
    let config = TrainingConfig {
        max_rounds: 200,
        ..TrainingConfig::default()
    };
    let a = train(&pmf, 2, &config, 42).unwrap();
    let b = train(&pmf, 2, &config, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.curve.to_csv(), b.curve.to_csv());
}

#[test]
fn pairing_is_learned() {
    let pmf = make_deterministic_partition(10, 2).unwrap();
    let out = train(&pmf, 2, &TrainingConfig::default(), 0).unwrap();
    assert_eq!(out.value, 1.0);
    let s = DeterministicStrategy::from_codes(&out.strategy.codes(), 2).unwrap();
    assert_eq!(expected_success_deterministic(&s, &pmf).unwrap(), 1.0);
}
