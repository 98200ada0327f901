//! Seeded Monte Carlo invariants. Tolerances are 3σ or 4σ bands unless
//! noted.

use std::collections::HashMap;

use rand::Rng;

use specden::diff::{estimate_diff_moments, exact_diff_moments, four_vertex_pair, samples_per_pattern};
use specden::distinguishers::{coupling_experiment, coupling_run, loop_detector, Guess};
use specden::instances::{gen_rw_instance, Which};
use specden::moments::{estimate_moments_walks, exact_moments_dense};
use specden::{build_graph, RandomSource, WeightedGraph};

fn hundred_vertex_graph() -> WeightedGraph {
    let mut rng = RandomSource::new(77).rng();
    let n = 100;
    let mut edges: Vec<(usize, usize, f64)> = (1..=n).map(|i| (i, i % n + 1, rng.gen_range(0.5..2.0))).collect();
    let mut seen: std::collections::HashSet<(usize, usize)> = edges.iter().map(|&(u, v, _)| (u.min(v), u.max(v))).collect();
    while edges.len() < n + 150 {
        let (u, v) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        if seen.insert((u.min(v), u.max(v))) {
            edges.push((u, v, rng.gen_range(0.1..1.0)));
        }
    }
    build_graph(n, &edges).unwrap()
}

#[test]
fn walk_moment_estimates_are_unbiased() {
    let g = hundred_vertex_graph();
    let k = 8;
    let exact = exact_moments_dense(&g, k).unwrap();
    let reps = 200;
    let source = RandomSource::new(3);
    let estimates: Vec<Vec<f64>> =
        (0..reps).map(|r| estimate_moments_walks(&g, k, 2000, source.fork(r)).unwrap().values).collect();
    for j in 1..=k {
        let xs: Vec<f64> = estimates.iter().map(|e| e[j - 1]).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let err = (mean - exact.get(j)).abs();
        assert!(err <= 4.0 * se, "j = {j}: |{mean} - {}| > 4 * {se}", exact.get(j));
    }
}

#[test]
fn difference_moments_concentrate() {
    let (g1, g2) = four_vertex_pair().unwrap();
    let (k, theta, delta) = (3, 0.05, 0.1);
    let exact = exact_diff_moments(&g1, &g2, k).unwrap();
    let source = RandomSource::new(11);
    let runs = 100;
    let mut failures = 0;
    for r in 0..runs {
        let est = estimate_diff_moments(&g1, &g2, k, theta, delta, u64::MAX, source.fork(r)).unwrap();
        for j in 1..=k {
            assert_eq!(est.returns[j - 1].len(), 1 << j);
            assert_eq!(est.samples[j - 1] as f64, samples_per_pattern(j, k, theta, delta));
        }
        failures += est.values.iter().zip(&exact).any(|(a, b)| (a - b).abs() > theta) as u32;
    }
    assert!(failures as f64 / runs as f64 <= delta + 0.05, "{failures} failures");
}

/// Relabels a walk by order of first appearance, so transcripts that differ
/// only by a vertex naming compare equal.
fn canonical(walk: &[usize]) -> Vec<u8> {
    let mut names = HashMap::new();
    walk.iter()
        .map(|v| {
            let next = names.len() as u8;
            *names.entry(*v).or_insert(next)
        })
        .collect()
}

fn total_variation(a: &HashMap<Vec<u8>, u64>, b: &HashMap<Vec<u8>, u64>, n: f64) -> f64 {
    let keys: std::collections::HashSet<_> = a.keys().chain(b.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (*a.get(k).unwrap_or(&0) as f64 - *b.get(k).unwrap_or(&0) as f64).abs() / n)
        .sum::<f64>()
}

#[test]
fn coupled_transcript_has_the_walk_marginal() {
    let (ell, n, t) = (3, 2, 3);
    let runs = 1_000_000u64;
    let source = RandomSource::new(5);
    let mut coupled: HashMap<Vec<u8>, u64> = HashMap::new();
    for i in 0..runs {
        let o = coupling_run(ell, n, 1, t, source.fork(i)).unwrap();
        *coupled.entry(canonical(o.s1.walk(0))).or_default() += 1;
    }
    // vertex names do not survive canonicalization, so the relabelling step
    // is immaterial here
    let g = gen_rw_instance(ell, Which::G1, Some(n)).unwrap();
    let mut rng = RandomSource::new(6).rng();
    let mut direct: HashMap<Vec<u8>, u64> = HashMap::new();
    let mut walk = Vec::with_capacity(t + 1);
    for _ in 0..runs {
        walk.clear();
        walk.push(rng.gen_range(1..=g.vertex_count()));
        for _ in 0..t {
            let next = g.walk_step(*walk.last().unwrap(), &mut rng).unwrap();
            walk.push(next);
        }
        *direct.entry(canonical(&walk)).or_default() += 1;
    }
    let tv = total_variation(&coupled, &direct, runs as f64);
    assert!(tv <= 0.01, "TV {tv}");
}

#[test]
fn event_failure_rates_within_their_bounds() {
    for (ell, n, m, t) in [(7, 32768, 2, 8), (9, 1 << 17, 4, 8)] {
        let s = coupling_experiment(ell, n, m, t, 20_000, RandomSource::new(ell as u64)).unwrap();
        let trials = s.trials as f64;
        for (failures, bound) in [(s.event1_failures, s.event1_bound), (s.event2_failures, s.event2_bound)] {
            let p = failures as f64 / trials;
            let sigma = (p * (1.0 - p) / trials).sqrt();
            assert!(p <= bound + 3.0 * sigma, "l = {ell}: {p} > {bound} + 3 * {sigma}");
        }
        assert_eq!(s.implication_violations, 0);
    }
}

#[test]
fn detector_never_says_g1_on_short_segment_g2_transcripts() {
    for (ell, n, m, t) in [(3, 64, 1, 6), (5, 16, 2, 20), (5, 64, 4, 12)] {
        let source = RandomSource::new(100 + ell as u64);
        let mut held = 0;
        for i in 0..5000 {
            let o = coupling_run(ell, n, m, t, source.fork(i)).unwrap();
            if o.event2_held {
                held += 1;
                assert_ne!(loop_detector(&o.s2, ell), Guess::G1, "run {i}");
            }
        }
        assert!(held > 100, "only {held} runs kept segments short");
    }
}
