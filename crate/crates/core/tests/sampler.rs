use feasolve::decode::{DecodeConfig, ScriptedPolicy, UniformValidPolicy};
use feasolve::gen::{random_instance, Distribution};
use feasolve::grammar::GrammarEngine;
use feasolve::problems::{check_feasibility, ProblemKind};
use feasolve::sampler::{
    adaptive_best_of_n, adaptive_bound, bayes_confidence, best_of_n, consistency,
    consistency_expectation_check, expected_gap, expected_rejection_samples, GapDistribution,
    SamplerConfig,
};
use feasolve::Solution;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn tours(spec: &[&[usize]]) -> Vec<Solution> {
    spec.iter().map(|s| Solution::Tour(s.to_vec())).collect()
}

#[test]
fn consistency_pair_counting() {
    let a: &[usize] = &[0, 1, 2];
    let b: &[usize] = &[0, 2, 1];
    let c: &[usize] = &[1, 0, 2];
    assert_eq!(consistency(&tours(&[a, a, a])).unwrap(), 1.0);
    assert_eq!(consistency(&tours(&[a, b, c])).unwrap(), 0.0);
    assert!((consistency(&tours(&[a, a, b])).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!(consistency(&tours(&[a])).is_err());
}

#[test]
fn consistency_uses_canonical_forms() {
    // same vertex set listed in different orders counts as equal
    let s = vec![
        Solution::VertexSet(vec![2, 0]),
        Solution::VertexSet(vec![0, 2]),
    ];
    assert_eq!(consistency(&s).unwrap(), 1.0);
}

#[test]
fn bayes_confidence_formula() {
    let cfg = SamplerConfig::default();
    let a: &[usize] = &[0, 1, 2];
    let b: &[usize] = &[0, 2, 1];
    let mut samples = tours(&[a, a, a, a, a, a, b, b]);
    let best = Solution::Tour(a.to_vec());
    assert!((bayes_confidence(&samples, &best, &cfg).unwrap() - 0.7).abs() < 1e-12);
    samples.truncate(1);
    assert!((bayes_confidence(&samples, &best, &cfg).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let absent = Solution::Tour(vec![2, 1, 0]);
    assert!(bayes_confidence(&samples, &absent, &cfg).is_err());
    // limit sanity: all n equal, confidence -> 1
    let big = vec![best.clone(); 10_000];
    assert!(bayes_confidence(&big, &best, &cfg).unwrap() > 0.999);
}

#[test]
fn scripted_policy_stops_at_n_min() {
    let inst = random_instance(ProblemKind::Tsp, 4, None, 3, Distribution::Uniform).unwrap();
    let engine = GrammarEngine::new(ProblemKind::Tsp, 4).unwrap();
    let policy =
        ScriptedPolicy::from_text(&engine.grammar.vocab, "Route: [0, 1, 2, 3], Objective: 1.0")
            .unwrap();
    let decode_cfg = DecodeConfig {
        greedy: true,
        ..DecodeConfig::default()
    };
    let cfg = SamplerConfig::default();
    let (sol, trace) = adaptive_best_of_n(&engine, &policy, &inst, &decode_cfg, &cfg).unwrap();
    assert_eq!(trace.samples_used, 8);
    assert!(trace.terminated_early);
    assert!((trace.confidence - 0.9).abs() < 1e-12);
    assert_eq!(sol, Solution::Tour(vec![0, 1, 2, 3]));
}

#[test]
fn uniform_policy_runs_to_n_max_on_large_space() {
    let inst = random_instance(ProblemKind::Tsp, 8, None, 9, Distribution::Uniform).unwrap();
    let engine = GrammarEngine::new(ProblemKind::Tsp, 8).unwrap();
    let cfg = SamplerConfig {
        n_max: 16,
        ..SamplerConfig::default()
    };
    let (_, trace) =
        adaptive_best_of_n(&engine, &UniformValidPolicy, &inst, &DecodeConfig::default(), &cfg)
            .unwrap();
    assert_eq!(trace.samples_used, 16);
    assert!(!trace.terminated_early);
    for rec in &trace.records {
        assert!(check_feasibility(&inst, &rec.solution).unwrap().feasible);
    }
}

#[test]
fn degenerate_single_sample_config() {
    let inst = random_instance(ProblemKind::Mis, 5, None, 2, Distribution::ErdosRenyi).unwrap();
    let engine = GrammarEngine::new(ProblemKind::Mis, 5).unwrap();
    let cfg = SamplerConfig {
        n_min: 1,
        n_max: 1,
        ..SamplerConfig::default()
    };
    let (sol, trace) =
        adaptive_best_of_n(&engine, &UniformValidPolicy, &inst, &DecodeConfig::default(), &cfg)
            .unwrap();
    assert_eq!(trace.samples_used, 1);
    assert!(check_feasibility(&inst, &sol).unwrap().feasible);
}

#[test]
fn fixed_n_is_prefix_consistent_with_adaptive() {
    let inst = random_instance(ProblemKind::Tsp, 6, None, 5, Distribution::Uniform).unwrap();
    let engine = GrammarEngine::new(ProblemKind::Tsp, 6).unwrap();
    let decode_cfg = DecodeConfig::default();
    let (_, fixed) = best_of_n(&engine, &UniformValidPolicy, &inst, &decode_cfg, 4).unwrap();
    let cfg = SamplerConfig {
        n_min: 8,
        n_max: 8,
        ..SamplerConfig::default()
    };
    let (_, adaptive) =
        adaptive_best_of_n(&engine, &UniformValidPolicy, &inst, &decode_cfg, &cfg).unwrap();
    for i in 0..4 {
        assert_eq!(fixed.records[i].solution, adaptive.records[i].solution);
    }
}

#[test]
fn best_objective_is_monotone_in_prefix_length() {
    let inst = random_instance(ProblemKind::Tsp, 7, None, 13, Distribution::Uniform).unwrap();
    let engine = GrammarEngine::new(ProblemKind::Tsp, 7).unwrap();
    let (_, trace) =
        best_of_n(&engine, &UniformValidPolicy, &inst, &DecodeConfig::default(), 20).unwrap();
    let mut best = f64::INFINITY;
    let mut prefix_bests = Vec::new();
    for rec in &trace.records {
        best = best.min(rec.objective);
        prefix_bests.push(best);
    }
    for w in prefix_bests.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn rejection_sampling_calculator() {
    assert_eq!(expected_rejection_samples(0.5, 0.01).unwrap(), 7);
    assert_eq!(expected_rejection_samples(0.5, 0.999999).unwrap(), 1);
    assert!(expected_rejection_samples(0.0, 0.5).is_err());
    assert!(expected_rejection_samples(0.5, 1.0).is_err());
    // Monte Carlo: 7 Bernoulli(0.5) trials succeed with prob >= 0.99
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ok = 0u32;
    for _ in 0..100_000 {
        if (0..7).any(|_| rng.gen_bool(0.5)) {
            ok += 1;
        }
    }
    assert!(ok as f64 / 100_000.0 >= 0.99);
}

#[test]
fn adaptive_bound_values() {
    let b = adaptive_bound(0.8, 8, 64).unwrap();
    assert!((b - (8.0 + 56.0 * 0.2f64.powi(8) / 0.8)).abs() < 1e-12);
    assert!(b < 8.001);
    assert!(adaptive_bound(0.9999999, 8, 64).unwrap() < 8.0 + 1e-6);
    assert!(adaptive_bound(0.0, 8, 64).is_err());
    assert!(adaptive_bound(0.5, 9, 8).is_err());
}

#[test]
fn expected_gap_closed_form_and_numeric() {
    assert_eq!(expected_gap(4, GapDistribution::Exponential(1.0)).unwrap(), 0.25);
    assert_eq!(expected_gap(1, GapDistribution::Exponential(2.0)).unwrap(), 0.5);
    // uniform on [0,1]: E[min of N] = 1/(N+1), via the numeric path
    let u = expected_gap(3, GapDistribution::Uniform(1.0)).unwrap();
    assert!((u - 0.25).abs() < 1e-4);
    assert!(expected_gap(0, GapDistribution::Exponential(1.0)).is_err());
    assert!(expected_gap(2, GapDistribution::Exponential(-1.0)).is_err());
    // Monte Carlo min-of-8 over Exp(1)
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 100_000;
    let mut acc = 0.0;
    for _ in 0..trials {
        acc += (0..8)
            .map(|_| -rng.gen::<f64>().ln())
            .fold(f64::INFINITY, f64::min);
    }
    let emp = acc / trials as f64;
    assert!((emp - 0.125).abs() / 0.125 < 0.05, "{}", emp);
}

#[test]
fn consistency_expectation_matches_collision_probability() {
    let (_, analytic) = consistency_expectation_check(&[1.0], 2, 10, 0).unwrap();
    assert_eq!(analytic, 1.0);
    let (emp, analytic) =
        consistency_expectation_check(&[0.5, 0.5], 2, 100_000, 7).unwrap();
    assert_eq!(analytic, 0.5);
    assert!((emp - 0.5).abs() / 0.5 < 0.02, "{}", emp);
    let (_, analytic) = consistency_expectation_check(&[0.25; 4], 3, 10, 0).unwrap();
    assert_eq!(analytic, 0.25);
    assert!(consistency_expectation_check(&[0.4, 0.4], 2, 10, 0).is_err());
    assert!(consistency_expectation_check(&[0.5, 0.5], 1, 10, 0).is_err());
}

#[test]
fn batched_stopping_checks_only_at_boundaries() {
    let inst = random_instance(ProblemKind::Tsp, 4, None, 3, Distribution::Uniform).unwrap();
    let engine = GrammarEngine::new(ProblemKind::Tsp, 4).unwrap();
    let policy =
        ScriptedPolicy::from_text(&engine.grammar.vocab, "Route: [0, 1, 2, 3], Objective: 1.0")
            .unwrap();
    let decode_cfg = DecodeConfig {
        greedy: true,
        ..DecodeConfig::default()
    };
    let cfg = SamplerConfig {
        batch: Some(12),
        ..SamplerConfig::default()
    };
    let (_, trace) = adaptive_best_of_n(&engine, &policy, &inst, &decode_cfg, &cfg).unwrap();
    // would stop at 8 per-sample; batching defers the check to 12
    assert_eq!(trace.samples_used, 12);
}
