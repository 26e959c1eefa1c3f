//! Acceptance-criterion suites, shared by the integration test and the
//! CLI `bench` verb. Each suite runs a group of property checks and
//! reports one pass/fail result per criterion.

use crate::bopo::{bopo_gradient, bopo_loss, build_pairs, dpo_gradient, train_toy, ToySoftmaxPolicy};
use crate::decode::{DecodeConfig, HeuristicPolicy, UniformValidPolicy};
use crate::gen::{fuzz_solution, random_instance, Distribution};
use crate::grammar::GrammarEngine;
use crate::oracle::{brute_force, enumerate_feasible};
use crate::problems::{check_feasibility, objective, ProblemKind, Sense, Solution};
use crate::repair::repair;
use crate::sampler::{
    adaptive_bound, best_of_n, consistency_expectation_check, expected_rejection_samples,
    simulate_adaptive_samples,
};
use crate::Instance;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

pub const SUITES: [&str; 7] = [
    "feasibility",
    "grammar",
    "locality",
    "lemma1",
    "sampling",
    "bopo-grad",
    "oracle-equiv",
];

#[derive(Debug, Clone)]
pub struct CheckResult {
    /// acceptance criterion number
    pub criterion: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
    pub wall_ms: u128,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const ALL_KINDS: [ProblemKind; 7] = [
    ProblemKind::Tsp,
    ProblemKind::Op,
    ProblemKind::Cvrp,
    ProblemKind::Mis,
    ProblemKind::Mvc,
    ProblemKind::Pfsp,
    ProblemKind::Jssp,
];

const CORPUS_PER_KIND: usize = 10_000;

/// Deterministic adversarial corpus case `i` for a kind.
fn corpus_case(kind: ProblemKind, i: usize, seed: u64) -> (Instance, Solution) {
    let size = 2 + i % 8;
    let machines = 1 + i % 3;
    let mix = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add((i as u64) << 8)
        .wrapping_add(kind as u64);
    let inst = random_instance(
        kind,
        size,
        Some(machines),
        mix,
        Distribution::default_for(kind),
    )
    .expect("generator respects its own invariants");
    let sol = fuzz_solution(&inst, mix.wrapping_mul(2654435761));
    (inst, sol)
}

fn feasibility_check(seed: u64) -> CheckResult {
    let failures: usize = ALL_KINDS
        .par_iter()
        .map(|&kind| {
            (0..CORPUS_PER_KIND)
                .filter(|&i| {
                    let (inst, sol) = corpus_case(kind, i, seed);
                    let out = repair(&inst, &sol).expect("repair is total on well-formed input");
                    !check_feasibility(&inst, &out.repaired)
                        .expect("repaired output is well-formed")
                        .feasible
                })
                .count()
        })
        .sum();
    CheckResult {
        criterion: 1,
        name: "repair feasibility on the adversarial corpus",
        passed: failures == 0,
        detail: format!(
            "{} infeasible outputs over {} repairs",
            failures,
            7 * CORPUS_PER_KIND
        ),
    }
}

fn idempotence_check(seed: u64) -> CheckResult {
    // full enumeration where the space is tiny, 1000 sampled feasible
    // solutions elsewhere
    let cases: [(ProblemKind, usize, Option<usize>, usize); 7] = [
        (ProblemKind::Tsp, 6, None, usize::MAX),
        (ProblemKind::Mis, 8, None, usize::MAX),
        (ProblemKind::Mvc, 8, None, usize::MAX),
        (ProblemKind::Pfsp, 5, Some(3), usize::MAX),
        (ProblemKind::Op, 7, None, 1000),
        (ProblemKind::Cvrp, 6, None, 1000),
        (ProblemKind::Jssp, 3, Some(3), 1000),
    ];
    let mut violations = 0usize;
    let mut total = 0usize;
    for (kind, size, machines, cap) in cases {
        let inst = random_instance(kind, size, machines, seed, Distribution::default_for(kind))
            .expect("generator respects its own invariants");
        let sols = enumerate_feasible(&inst, cap.min(1_000_000))
            .expect("sizes chosen within enumeration caps");
        total += sols.len();
        violations += sols
            .par_iter()
            .filter(|sol| {
                let out = repair(&inst, sol).expect("repair is total");
                out.modified
            })
            .count();
    }
    CheckResult {
        criterion: 3,
        name: "repair idempotence on feasible solutions",
        passed: violations == 0,
        detail: format!("{} modified out of {} feasible inputs", violations, total),
    }
}

fn grammar_check(seed: u64) -> CheckResult {
    let mut failures = 0usize;
    for kind in ALL_KINDS {
        let engines: Vec<(usize, GrammarEngine)> = (2..=7)
            .map(|n| (n, GrammarEngine::new(kind, n).expect("grammar builds")))
            .collect();
        failures += (0..CORPUS_PER_KIND)
            .into_par_iter()
            .filter(|&i| {
                let (n, engine) = &engines[i % engines.len()];
                let inst = random_instance(
                    kind,
                    *n,
                    Some(2),
                    seed ^ (i as u64) << 4,
                    Distribution::default_for(kind),
                )
                .expect("generator respects its own invariants");
                let cfg = DecodeConfig {
                    seed: seed.wrapping_add(i as u64),
                    ..DecodeConfig::default()
                };
                crate::decode::sample_solution(engine, &UniformValidPolicy, &inst, &cfg).is_err()
            })
            .count();
    }
    CheckResult {
        criterion: 2,
        name: "constrained decodes always parse",
        passed: failures == 0,
        detail: format!(
            "{} parse failures over {} decodes",
            failures,
            7 * CORPUS_PER_KIND
        ),
    }
}

fn locality_check(seed: u64) -> CheckResult {
    let violations: usize = ALL_KINDS
        .par_iter()
        .map(|&kind| {
            (0..CORPUS_PER_KIND)
                .filter(|&i| {
                    let (inst, sol) = corpus_case(kind, i, seed);
                    let out = repair(&inst, &sol).expect("repair is total");
                    out.distance_moved > out.alpha_bound * out.input_magnitude + 1e-9
                })
                .count()
        })
        .sum();
    CheckResult {
        criterion: 4,
        name: "bounded locality d <= alpha * v",
        passed: violations == 0,
        detail: format!(
            "{} violations over {} repairs",
            violations,
            7 * CORPUS_PER_KIND
        ),
    }
}

fn tsp_quality_check(seed: u64) -> CheckResult {
    let bound_per_missing = 2.0 * 2f64.sqrt();
    let violations = (0..CORPUS_PER_KIND)
        .into_par_iter()
        .filter(|&i| {
            let (inst, sol) = corpus_case(ProblemKind::Tsp, i, seed);
            let seq = match &sol {
                Solution::Tour(s) => s.clone(),
                _ => unreachable!(),
            };
            let n = inst.size();
            let mut seen = std::collections::HashSet::new();
            let mut kept: Vec<usize> = Vec::new();
            for &v in &seq {
                if v < n && seen.insert(v) {
                    kept.push(v);
                }
            }
            let missing = n - kept.len();
            let before = if kept.len() < 2 {
                0.0
            } else {
                let mut l = inst.dist(kept[0], *kept.last().unwrap());
                l += kept.windows(2).map(|w| inst.dist(w[0], w[1])).sum::<f64>();
                l
            };
            let out = repair(&inst, &sol).expect("repair is total");
            let after = objective(&inst, &out.repaired).expect("repaired tours evaluate");
            after - before > bound_per_missing * missing as f64 + 1e-9
        })
        .count();
    CheckResult {
        criterion: 5,
        name: "greedy insertion quality bound on unit-square instances",
        passed: violations == 0,
        detail: format!("{} violations over {} repairs", violations, CORPUS_PER_KIND),
    }
}

fn lemma1_check(seed: u64) -> CheckResult {
    let dists: [(&str, Vec<f64>); 3] = [
        ("point mass", vec![1.0]),
        ("fair coin", vec![0.5, 0.5]),
        ("uniform-4", vec![0.25; 4]),
    ];
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for (name, p) in &dists {
        let (emp, analytic) =
            consistency_expectation_check(p, 2, 100_000, seed).expect("valid distributions");
        let rel = (emp - analytic).abs() / analytic;
        worst = worst.max(rel);
        detail.push_str(&format!("{}: emp {:.4} vs {:.4}; ", name, emp, analytic));
    }
    CheckResult {
        criterion: 6,
        name: "consistency expectation equals collision probability",
        passed: worst <= 0.02,
        detail: format!("{}max rel err {:.4}", detail, worst),
    }
}

fn cor2_check(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 4, 8] {
        let trials = 100_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            acc += (0..n)
                .map(|_| -rng.gen::<f64>().ln())
                .fold(f64::INFINITY, f64::min);
        }
        let emp = acc / trials as f64;
        let expect = 1.0 / n as f64;
        worst = worst.max((emp - expect).abs() / expect);
    }
    CheckResult {
        criterion: 7,
        name: "best-of-N gap decays linearly under Exp(1)",
        passed: worst <= 0.05,
        detail: format!("max rel err {:.4} over N in {{1,2,4,8}}", worst),
    }
}

fn cor1_check(seed: u64) -> CheckResult {
    let n = expected_rejection_samples(0.5, 0.01).expect("valid arguments");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = 100_000;
    let mut ok = 0usize;
    for _ in 0..trials {
        if (0..n).any(|_| rng.gen_bool(0.5)) {
            ok += 1;
        }
    }
    let rate = ok as f64 / trials as f64;
    CheckResult {
        criterion: 8,
        name: "rejection sampling size calculator",
        passed: n == 7 && rate >= 0.99,
        detail: format!("calculator {} (want 7), success rate {:.4}", n, rate),
    }
}

fn thm5_check(seed: u64) -> CheckResult {
    let easy = simulate_adaptive_samples(0.8, 8, 64, 10_000, seed).expect("valid arguments");
    let hard = simulate_adaptive_samples(0.05, 8, 64, 10_000, seed ^ 1).expect("valid arguments");
    let easy_bound = adaptive_bound(0.8, 8, 64).expect("valid arguments");
    let hard_bound = adaptive_bound(0.05, 8, 64).expect("valid arguments");
    let passed = easy <= easy_bound + 0.5 && easy <= 8.501 && hard > 8.0 && hard <= hard_bound + 0.5;
    CheckResult {
        criterion: 9,
        name: "adaptive sample-count bound",
        passed,
        detail: format!(
            "q=0.8: {:.4} (bound {:.4}); q=0.05: {:.2} (bound {:.2})",
            easy, easy_bound, hard, hard_bound
        ),
    }
}

fn bopo_grad_check(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut dpo_gap: f64 = 0.0;
    for trial in 0..20u64 {
        let inst = random_instance(ProblemKind::Tsp, 4, None, 100 + trial, Distribution::Uniform)
            .expect("generator respects its own invariants");
        let mut policy = ToySoftmaxPolicy::new(&inst, 100).expect("within enumeration caps");
        for t in policy.theta.iter_mut() {
            *t = rng.gen_range(-1.0..1.0);
        }
        let batch = loop {
            let samples: Vec<Solution> = (0..5)
                .map(|_| policy.solutions[rng.gen_range(0..policy.solutions.len())].clone())
                .collect();
            let b = build_pairs(&inst, &samples).expect("well-formed samples");
            if !b.is_empty() {
                break b;
            }
        };
        let beta = rng.gen_range(0.5..3.0);
        let grad = bopo_gradient(&policy, &batch, beta).expect("non-empty batch");
        let h = 1e-5;
        for i in 0..policy.theta.len() {
            let mut plus = policy.clone();
            plus.theta[i] += h;
            let mut minus = policy.clone();
            minus.theta[i] -= h;
            let fd = (bopo_loss(&plus, &batch, beta).expect("non-empty batch")
                - bopo_loss(&minus, &batch, beta).expect("non-empty batch"))
                / (2.0 * h);
            worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1e-3));
        }
        // single-pair identity against the unweighted reference gradient
        if batch.pairs.len() == 1 && (batch.pairs[0].weight - 1.0).abs() < 1e-12 {
            let dpo = dpo_gradient(
                &policy,
                batch.best.as_ref().expect("non-empty batch has an anchor"),
                &batch.pairs[0].solution,
                beta,
            )
            .expect("solutions are in the enumerated set");
            for (a, b) in grad.iter().zip(&dpo) {
                dpo_gap = dpo_gap.max((a - b).abs());
            }
        }
    }
    CheckResult {
        criterion: 10,
        name: "preference gradient matches finite differences",
        passed: worst < 1e-5 && dpo_gap < 1e-12,
        detail: format!("max FD rel err {:.2e}, max single-pair gap {:.2e}", worst, dpo_gap),
    }
}

fn thm6_check(seed: u64) -> CheckResult {
    // trend run: running-mean squared gradient norm shrinks with T
    let inst = random_instance(ProblemKind::Tsp, 4, None, 12, Distribution::Uniform)
        .expect("generator respects its own invariants");
    let mut policy = ToySoftmaxPolicy::new(&inst, 100).expect("within enumeration caps");
    let trace = train_toy(&mut policy, &inst, 400, None, 8, 1.0, seed).expect("valid config");
    let mean_to = |t: usize| -> f64 {
        trace.steps[..t].iter().map(|s| s.grad_norm_sq).sum::<f64>() / t as f64
    };
    let trend_ok = mean_to(400) <= mean_to(100);
    // loss decrease across seeds, smoothed over the first/last 10 active steps
    let wins: usize = (0..20u64)
        .into_par_iter()
        .filter(|&s| {
            let inst = random_instance(ProblemKind::Tsp, 4, None, 40 + s, Distribution::Uniform)
                .expect("generator respects its own invariants");
            let mut policy = ToySoftmaxPolicy::new(&inst, 100).expect("within enumeration caps");
            let trace =
                train_toy(&mut policy, &inst, 200, None, 8, 1.0, s).expect("valid config");
            let active: Vec<f64> = trace
                .steps
                .iter()
                .filter(|r| r.loss != 0.0)
                .map(|r| r.loss)
                .collect();
            if active.len() < 20 {
                return true;
            }
            let head: f64 = active[..10].iter().sum::<f64>() / 10.0;
            let tail: f64 = active[active.len() - 10..].iter().sum::<f64>() / 10.0;
            tail < head
        })
        .count();
    CheckResult {
        criterion: 11,
        name: "training trend: gradient norms shrink, loss decreases",
        passed: trend_ok && wins >= 19,
        detail: format!(
            "grad-norm mean {:.4} @100 vs {:.4} @400; loss decreased in {}/20 seeds",
            mean_to(100),
            mean_to(400),
            wins
        ),
    }
}

fn oracle_equiv_check(seed: u64) -> CheckResult {
    let cases: [(ProblemKind, usize, Option<usize>); 7] = [
        (ProblemKind::Tsp, 6, None),
        (ProblemKind::Op, 6, None),
        (ProblemKind::Cvrp, 5, None),
        (ProblemKind::Mis, 8, None),
        (ProblemKind::Mvc, 8, None),
        (ProblemKind::Pfsp, 4, Some(3)),
        (ProblemKind::Jssp, 3, Some(3)),
    ];
    let mut beats_oracle = 0usize;
    let mut bound_violations = 0usize;
    for (kind, size, machines) in cases {
        let engine = GrammarEngine::new(kind, size).expect("grammar builds");
        let results: Vec<(bool, bool)> = (0..50u64)
            .into_par_iter()
            .map(|i| {
                let inst = random_instance(
                    kind,
                    size,
                    machines,
                    seed.wrapping_add(i * 7919),
                    Distribution::default_for(kind),
                )
                .expect("generator respects its own invariants");
                let opt = brute_force(&inst).expect("within oracle caps");
                let cfg = DecodeConfig {
                    seed: seed.wrapping_add(i),
                    ..DecodeConfig::default()
                };
                let (best, trace) = best_of_n(&engine, &UniformValidPolicy, &inst, &cfg, 8)
                    .expect("uniform decodes never fail");
                let best_val = objective(&inst, &best).expect("sampler output is feasible");
                let beats = match kind.sense() {
                    Sense::Min => best_val < opt.value - 1e-9,
                    Sense::Max => best_val > opt.value + 1e-9,
                };
                // end-to-end bound: the achieved gap cannot exceed the
                // mean per-sample gap plus the repair locality slack
                let signed = |v: f64| match kind.sense() {
                    Sense::Min => v,
                    Sense::Max => -v,
                };
                let gap_best = signed(best_val) - signed(opt.value);
                let mean_gap = trace
                    .records
                    .iter()
                    .map(|r| signed(r.objective) - signed(opt.value))
                    .sum::<f64>()
                    / trace.records.len() as f64;
                (beats, gap_best > mean_gap + 1e-9)
            })
            .collect();
        beats_oracle += results.iter().filter(|r| r.0).count();
        bound_violations += results.iter().filter(|r| r.1).count();
    }
    // heuristic-policy sanity threshold on a slightly larger TSP
    let engine = GrammarEngine::new(ProblemKind::Tsp, 8).expect("grammar builds");
    let gaps: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let inst = random_instance(
                ProblemKind::Tsp,
                8,
                None,
                seed.wrapping_add(31 + i * 104729),
                Distribution::Uniform,
            )
            .expect("generator respects its own invariants");
            let opt = brute_force(&inst).expect("within oracle caps");
            let policy = HeuristicPolicy::new(inst.clone());
            let cfg = DecodeConfig {
                seed: seed.wrapping_add(i),
                temperature: 0.3,
                ..DecodeConfig::default()
            };
            let (best, _) =
                best_of_n(&engine, &policy, &inst, &cfg, 8).expect("decodes never fail");
            let v = objective(&inst, &best).expect("sampler output is feasible");
            (v - opt.value) / opt.value
        })
        .collect();
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    CheckResult {
        criterion: 12,
        name: "pipeline never beats the oracle; gaps within bound",
        passed: beats_oracle == 0 && bound_violations == 0 && mean_gap <= 0.10,
        detail: format!(
            "{} oracle beats, {} bound violations, heuristic mean gap {:.2}%",
            beats_oracle,
            bound_violations,
            100.0 * mean_gap
        ),
    }
}

/// Runs one named suite. Unknown names return None.
pub fn run_suite(suite: &str, seed: u64) -> Option<SuiteReport> {
    let t0 = Instant::now();
    let checks = match suite {
        "feasibility" => vec![feasibility_check(seed), idempotence_check(seed)],
        "grammar" => vec![grammar_check(seed)],
        "locality" => vec![locality_check(seed), tsp_quality_check(seed)],
        "lemma1" => vec![lemma1_check(seed)],
        "sampling" => vec![cor2_check(seed), cor1_check(seed), thm5_check(seed)],
        "bopo-grad" => vec![bopo_grad_check(seed), thm6_check(seed)],
        "oracle-equiv" => vec![oracle_equiv_check(seed)],
        _ => return None,
    };
    Some(SuiteReport {
        suite: suite.to_string(),
        checks,
        wall_ms: t0.elapsed().as_millis(),
    })
}

/// All suites in criterion order.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .map(|s| run_suite(s, seed).expect("known suite"))
        .collect()
}
