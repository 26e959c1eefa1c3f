use feasolve::bopo::{
    bopo_gradient, bopo_loss, build_pairs, dpo_gradient, grpo_gradient, train_toy,
    PreferenceBatch, ToySoftmaxPolicy,
};
use feasolve::gen::{random_instance, Distribution};
use feasolve::oracle::brute_force;
use feasolve::problems::ProblemKind;
use feasolve::Solution;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn tsp4(seed: u64) -> feasolve::Instance {
    random_instance(ProblemKind::Tsp, 4, None, seed, Distribution::Uniform).unwrap()
}

#[test]
fn build_pairs_weights_and_anchoring() {
    let inst = tsp4(1);
    let policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    // pick three tours with distinct objectives
    let mut by_obj: Vec<(f64, Solution)> = policy
        .solutions
        .iter()
        .map(|s| (feasolve::problems::objective(&inst, s).unwrap(), s.clone()))
        .collect();
    by_obj.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let samples: Vec<Solution> = by_obj.iter().take(3).map(|(_, s)| s.clone()).collect();
    let batch = build_pairs(&inst, &samples).unwrap();
    assert_eq!(batch.k_prime, 3);
    assert_eq!(batch.pairs.len(), 2);
    assert_eq!(batch.best.as_ref().unwrap(), &samples[0]);
    let mean_w: f64 =
        batch.pairs.iter().map(|p| p.weight).sum::<f64>() / batch.pairs.len() as f64;
    assert!((mean_w - 1.0).abs() < 1e-12);
    for p in &batch.pairs {
        assert!(p.gap >= 0.0);
    }
    // equal gaps normalize to weight 1 each
    let dup = vec![samples[0].clone(), samples[1].clone(), samples[1].clone()];
    let batch = build_pairs(&inst, &dup).unwrap();
    assert_eq!(batch.pairs.len(), 1);
    assert!((batch.pairs[0].weight - 1.0).abs() < 1e-12);
}

#[test]
fn degenerate_batches_are_empty_values() {
    let inst = tsp4(2);
    let policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let one = policy.solutions[0].clone();
    // all samples identical
    let batch = build_pairs(&inst, &[one.clone(), one.clone(), one]).unwrap();
    assert!(batch.is_empty());
    // all infeasible
    let bad = Solution::Tour(vec![0, 0, 0]);
    let batch = build_pairs(&inst, &[bad.clone(), bad]).unwrap();
    assert!(batch.is_empty());
    assert_eq!(batch.k_prime, 0);
    // empty batch is a loss error, not a build error
    assert!(bopo_loss(&policy, &batch, 1.0).is_err());
}

fn random_batch(inst: &feasolve::Instance, policy: &ToySoftmaxPolicy, rng: &mut ChaCha8Rng) -> PreferenceBatch {
    loop {
        let samples: Vec<Solution> = (0..5)
            .map(|_| policy.solutions[rng.gen_range(0..policy.solutions.len())].clone())
            .collect();
        let batch = build_pairs(inst, &samples).unwrap();
        if !batch.is_empty() {
            return batch;
        }
    }
}

#[test]
fn uniform_theta_loss_is_log_two() {
    let inst = tsp4(3);
    let policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // weights inside the clamp range average to exactly 1
    let batch = loop {
        let b = random_batch(&inst, &policy, &mut rng);
        if b.pairs.iter().all(|p| (0.1..=10.0).contains(&p.weight)) {
            break b;
        }
    };
    let loss = bopo_loss(&policy, &batch, 1.7).unwrap();
    assert!((loss - 2f64.ln()).abs() < 1e-12, "{}", loss);
}

#[test]
fn loss_limits_and_ordering() {
    let inst = tsp4(4);
    let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batch = random_batch(&inst, &policy, &mut rng);
    let anchor = policy.index_of(batch.best.as_ref().unwrap()).unwrap();
    // strongly favor the anchor: loss -> 0
    policy.theta[anchor] = 30.0;
    assert!(bopo_loss(&policy, &batch, 5.0).unwrap() < 1e-6);
    // favor an inferior solution instead: loss above log 2
    policy.theta[anchor] = 0.0;
    let worse = policy.index_of(&batch.pairs[0].solution).unwrap();
    policy.theta[worse] = 3.0;
    assert!(bopo_loss(&policy, &batch, 1.0).unwrap() > 2f64.ln());
    // gradient vanishes when the anchor already dominates
    policy.theta[worse] = 0.0;
    policy.theta[anchor] = 60.0;
    let grad = bopo_gradient(&policy, &batch, 1.0).unwrap();
    assert!(grad.iter().all(|g| g.abs() < 1e-12));
}

#[test]
fn single_pair_gradient_is_symmetric_and_matches_dpo() {
    let inst = tsp4(5);
    let policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let batch = loop {
        let b = random_batch(&inst, &policy, &mut rng);
        if b.pairs.len() == 1 && (b.pairs[0].weight - 1.0).abs() < 1e-12 {
            break b;
        }
    };
    let anchor = policy.index_of(batch.best.as_ref().unwrap()).unwrap();
    let loser = policy.index_of(&batch.pairs[0].solution).unwrap();
    let grad = bopo_gradient(&policy, &batch, 2.0).unwrap();
    assert!(grad[anchor] < 0.0);
    assert!(grad[loser] > 0.0);
    assert!((grad[anchor] + grad[loser]).abs() < 1e-12);
    let dpo = dpo_gradient(
        &policy,
        batch.best.as_ref().unwrap(),
        &batch.pairs[0].solution,
        2.0,
    )
    .unwrap();
    for (a, b) in grad.iter().zip(&dpo) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..20 {
        let inst = tsp4(100 + trial);
        let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
        for t in policy.theta.iter_mut() {
            *t = rng.gen_range(-1.0..1.0);
        }
        let batch = random_batch(&inst, &policy, &mut rng);
        let beta = rng.gen_range(0.5..3.0);
        let grad = bopo_gradient(&policy, &batch, beta).unwrap();
        let h = 1e-5;
        for i in 0..policy.theta.len() {
            let mut plus = policy.clone();
            plus.theta[i] += h;
            let mut minus = policy.clone();
            minus.theta[i] -= h;
            let fd = (bopo_loss(&plus, &batch, beta).unwrap()
                - bopo_loss(&minus, &batch, beta).unwrap())
                / (2.0 * h);
            let denom = fd.abs().max(1e-3);
            assert!(
                (grad[i] - fd).abs() / denom < 1e-5,
                "trial {} coord {}: {} vs {}",
                trial,
                i,
                grad[i],
                fd
            );
        }
    }
}

#[test]
fn grpo_zero_for_equal_rewards_and_matches_finite_differences() {
    let inst = tsp4(6);
    let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let samples: Vec<Solution> = policy.solutions.iter().take(3).cloned().collect();
    let grad = grpo_gradient(&policy, &samples, &[1.0, 1.0, 1.0]).unwrap();
    assert!(grad.iter().all(|g| *g == 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in policy.theta.iter_mut() {
        *t = rng.gen_range(-1.0..1.0);
    }
    let rewards = [0.3, -1.2, 0.9];
    let grad = grpo_gradient(&policy, &samples, &rewards).unwrap();
    // finite differences of the surrogate -1/K sum adv_i log pi(y_i)
    let k = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / k;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / k).sqrt();
    let surrogate = |p: &ToySoftmaxPolicy| -> f64 {
        -samples
            .iter()
            .zip(&rewards)
            .map(|(s, &r)| (r - mean) / (std + 1e-8) * p.log_prob(p.index_of(s).unwrap()))
            .sum::<f64>()
            / k
    };
    let h = 1e-5;
    for i in 0..policy.theta.len() {
        let mut plus = policy.clone();
        plus.theta[i] += h;
        let mut minus = policy.clone();
        minus.theta[i] -= h;
        let fd = (surrogate(&plus) - surrogate(&minus)) / (2.0 * h);
        assert!((grad[i] - fd).abs() / fd.abs().max(1e-3) < 1e-5);
    }
}

#[test]
fn shifting_all_objectives_leaves_weights_unchanged() {
    // gaps are objective differences; a constant shift in prizes of an
    // OP-like reward does not apply to TSP directly, so verify via two
    // batches built from the same tours where the invariant reduces to
    // determinism of the weight computation
    let inst = tsp4(7);
    let policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch1 = random_batch(&inst, &policy, &mut rng);
    let again = build_pairs(
        &inst,
        &std::iter::once(batch1.best.clone().unwrap())
            .chain(batch1.pairs.iter().map(|p| p.solution.clone()))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    for (a, b) in batch1.pairs.iter().zip(&again.pairs) {
        assert!((a.weight - b.weight).abs() < 1e-12);
    }
}

#[test]
fn training_moves_mass_toward_the_optimum() {
    let inst = tsp4(0);
    let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let opt = brute_force(&inst).unwrap();
    let idx = policy.index_of(&opt.solution).unwrap();
    let before = policy.probabilities()[idx];
    let trace = train_toy(&mut policy, &inst, 300, None, 8, 1.0, 0).unwrap();
    let after = policy.probabilities()[idx];
    assert!(after > before, "{} -> {}", before, after);
    assert!(trace.learning_rate > 0.0);
    assert_eq!(trace.steps.len(), 300);
}

#[test]
fn zero_learning_rate_keeps_theta_fixed() {
    let inst = tsp4(9);
    let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let before = policy.theta.clone();
    train_toy(&mut policy, &inst, 50, Some(0.0), 6, 1.0, 3).unwrap();
    assert_eq!(policy.theta, before);
}

#[test]
fn loss_decreases_over_most_seeded_runs() {
    let mut wins = 0;
    for seed in 0..20u64 {
        let inst = tsp4(40 + seed);
        let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
        let trace = train_toy(&mut policy, &inst, 200, None, 8, 1.0, seed).unwrap();
        let active: Vec<f64> = trace
            .steps
            .iter()
            .filter(|s| s.loss != 0.0)
            .map(|s| s.loss)
            .collect();
        if active.len() >= 20 {
            let head: f64 = active[..10].iter().sum::<f64>() / 10.0;
            let tail: f64 = active[active.len() - 10..].iter().sum::<f64>() / 10.0;
            if tail < head {
                wins += 1;
            }
        } else {
            wins += 1;
        }
    }
    assert!(wins >= 19, "{}/20", wins);
}

#[test]
fn gradient_norm_trend_flattens() {
    // running mean of ||grad||^2 over a long run stays within 2x of the
    // C/sqrt(T) envelope fitted on a short prefix
    let inst = tsp4(12);
    let mut policy = ToySoftmaxPolicy::new(&inst, 100).unwrap();
    let trace = train_toy(&mut policy, &inst, 400, None, 8, 1.0, 0).unwrap();
    let mean_to = |t: usize| -> f64 {
        trace.steps[..t].iter().map(|s| s.grad_norm_sq).sum::<f64>() / t as f64
    };
    let c = mean_to(100) * (100f64).sqrt();
    let envelope = c / (400f64).sqrt();
    assert!(mean_to(400) <= 2.0 * envelope, "{} vs {}", mean_to(400), envelope);
}
