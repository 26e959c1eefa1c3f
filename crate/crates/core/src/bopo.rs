//! Best-anchored preference learning on a toy softmax policy.
//!
//! The policy enumerates the feasible set of a tiny instance and puts a
//! softmax over it, so log-probabilities and gradients are exact. The
//! loss weights each (best, other) pair by its objective gap relative to
//! the batch mean gap.

use crate::error::{BopoError, ProblemError};
use crate::oracle::enumerate_feasible;
use crate::problems::{canonical_solution, check_feasibility, objective, Sense, Solution};
use crate::Instance;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Bounded-scaling clamp on the gap weights.
const WEIGHT_CLAMP: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct PreferencePair {
    pub solution: Solution,
    /// objective gap to the anchor, non-negative
    pub gap: f64,
    /// gap / mean gap, unclamped
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct PreferenceBatch {
    pub instance_id: String,
    pub best: Option<Solution>,
    pub pairs: Vec<PreferencePair>,
    /// distinct feasible samples, anchor included
    pub k_prime: usize,
    pub mean_gap: f64,
}

impl PreferenceBatch {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Anchor on the best feasible sample and pair it against every other
/// distinct feasible sample. All-infeasible, single-solution, and
/// zero-gap batches come back empty.
pub fn build_pairs(inst: &Instance, samples: &[Solution]) -> Result<PreferenceBatch, ProblemError> {
    let signed = |v: f64| match inst.kind().sense() {
        Sense::Min => v,
        Sense::Max => -v,
    };
    // distinct feasible samples in first-occurrence order
    let mut seen = std::collections::HashSet::new();
    let mut feasible: Vec<(Solution, f64)> = Vec::new();
    for s in samples {
        if !check_feasibility(inst, s)?.feasible {
            continue;
        }
        if seen.insert(canonical_solution(s)) {
            feasible.push((s.clone(), objective(inst, s)?));
        }
    }
    let empty = |best: Option<Solution>| PreferenceBatch {
        instance_id: inst.id.clone(),
        best,
        pairs: Vec::new(),
        k_prime: feasible.len(),
        mean_gap: 0.0,
    };
    if feasible.len() <= 1 {
        let best = feasible.first().map(|(s, _)| s.clone());
        return Ok(empty(best));
    }
    let mut best = 0usize;
    for i in 1..feasible.len() {
        if signed(feasible[i].1) < signed(feasible[best].1) {
            best = i;
        }
    }
    let anchor_value = signed(feasible[best].1);
    let anchor = feasible[best].0.clone();
    let gaps: Vec<(Solution, f64)> = feasible
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, (s, v))| (s.clone(), signed(*v) - anchor_value))
        .collect();
    let mean_gap = gaps.iter().map(|(_, g)| g).sum::<f64>() / gaps.len() as f64;
    if mean_gap <= 0.0 {
        return Ok(empty(Some(anchor)));
    }
    let pairs = gaps
        .into_iter()
        .map(|(solution, gap)| PreferencePair {
            weight: gap / mean_gap,
            solution,
            gap,
        })
        .collect();
    Ok(PreferenceBatch {
        instance_id: inst.id.clone(),
        best: Some(anchor),
        pairs,
        k_prime: feasible.len(),
        mean_gap,
    })
}

/// Softmax over an enumerated feasible set; the exact stand-in for a
/// parameterized sampler at desk scale.
#[derive(Debug, Clone)]
pub struct ToySoftmaxPolicy {
    pub solutions: Vec<Solution>,
    pub theta: Vec<f64>,
}

impl ToySoftmaxPolicy {
    pub fn new(inst: &Instance, cap: usize) -> Result<Self, crate::error::OracleError> {
        let solutions = enumerate_feasible(inst, cap)?;
        let theta = vec![0.0; solutions.len()];
        Ok(ToySoftmaxPolicy { solutions, theta })
    }

    pub fn index_of(&self, sol: &Solution) -> Option<usize> {
        let target = canonical_solution(sol);
        self.solutions
            .iter()
            .position(|s| canonical_solution(s) == target)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.theta.iter().map(|t| (t - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    pub fn log_prob(&self, index: usize) -> f64 {
        let max = self.theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = self.theta.iter().map(|t| (t - max).exp()).sum();
        self.theta[index] - max - z.ln()
    }

    pub fn sample_index(&self, rng: &mut ChaCha8Rng) -> usize {
        let probs = self.probabilities();
        let mut u = rng.gen::<f64>();
        for (i, p) in probs.iter().enumerate() {
            u -= p;
            if u <= 0.0 {
                return i;
            }
        }
        probs.len() - 1
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log sigma(x).
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -((-x).exp().ln_1p())
    } else {
        x - x.exp().ln_1p()
    }
}

fn indexed_pairs(
    policy: &ToySoftmaxPolicy,
    batch: &PreferenceBatch,
) -> Result<(usize, Vec<(usize, f64)>), BopoError> {
    if batch.is_empty() {
        return Err(BopoError::EmptyBatch);
    }
    let anchor = batch.best.as_ref().ok_or(BopoError::EmptyBatch)?;
    let anchor_idx = policy
        .index_of(anchor)
        .expect("anchor not in the policy's enumerated set");
    let pairs = batch
        .pairs
        .iter()
        .map(|p| {
            let idx = policy
                .index_of(&p.solution)
                .expect("sample not in the policy's enumerated set");
            (idx, p.weight.clamp(1.0 / WEIGHT_CLAMP, WEIGHT_CLAMP))
        })
        .collect();
    Ok((anchor_idx, pairs))
}

/// Weighted logistic preference loss against the batch anchor. The
/// log-probability ratio reduces to a difference of parameters under the
/// softmax, so the partition term cancels.
pub fn bopo_loss(
    policy: &ToySoftmaxPolicy,
    batch: &PreferenceBatch,
    beta: f64,
) -> Result<f64, BopoError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(BopoError::InvalidBeta);
    }
    let (anchor, pairs) = indexed_pairs(policy, batch)?;
    let mut acc = 0.0;
    for &(idx, w) in &pairs {
        let s = policy.theta[anchor] - policy.theta[idx];
        acc += w * log_sigmoid(beta * s);
    }
    Ok(-acc / pairs.len() as f64)
}

/// Exact gradient of `bopo_loss` with respect to theta.
pub fn bopo_gradient(
    policy: &ToySoftmaxPolicy,
    batch: &PreferenceBatch,
    beta: f64,
) -> Result<Vec<f64>, BopoError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(BopoError::InvalidBeta);
    }
    let (anchor, pairs) = indexed_pairs(policy, batch)?;
    let mut grad = vec![0.0; policy.theta.len()];
    let scale = 1.0 / pairs.len() as f64;
    for &(idx, w) in &pairs {
        let s = policy.theta[anchor] - policy.theta[idx];
        let coeff = scale * w * beta * sigmoid(-beta * s);
        grad[anchor] -= coeff;
        grad[idx] += coeff;
    }
    Ok(grad)
}

/// Direct preference gradient for one unweighted pair; coincides with
/// the weighted loss at w = 1.
pub fn dpo_gradient(
    policy: &ToySoftmaxPolicy,
    winner: &Solution,
    loser: &Solution,
    beta: f64,
) -> Result<Vec<f64>, BopoError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(BopoError::InvalidBeta);
    }
    let w = policy.index_of(winner).ok_or(BopoError::EmptyBatch)?;
    let l = policy.index_of(loser).ok_or(BopoError::EmptyBatch)?;
    let s = policy.theta[w] - policy.theta[l];
    let coeff = beta * sigmoid(-beta * s);
    let mut grad = vec![0.0; policy.theta.len()];
    grad[w] -= coeff;
    grad[l] += coeff;
    Ok(grad)
}

/// Group-relative policy gradient with standardized advantages. Equal
/// rewards standardize to zero advantages and hence a zero gradient.
pub fn grpo_gradient(
    policy: &ToySoftmaxPolicy,
    samples: &[Solution],
    rewards: &[f64],
) -> Result<Vec<f64>, BopoError> {
    if samples.is_empty() || samples.len() != rewards.len() {
        return Err(BopoError::EmptyBatch);
    }
    let k = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / k;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / k;
    let std = var.sqrt();
    let probs = policy.probabilities();
    let mut grad = vec![0.0; policy.theta.len()];
    for (sol, &r) in samples.iter().zip(rewards) {
        let adv = (r - mean) / (std + 1e-8);
        if adv == 0.0 {
            continue;
        }
        let idx = policy.index_of(sol).ok_or(BopoError::EmptyBatch)?;
        // gradient of -adv * log pi(y): -(e_idx - softmax)
        for (j, g) in grad.iter_mut().enumerate() {
            let indicator = if j == idx { 1.0 } else { 0.0 };
            *g -= adv / k * (indicator - probs[j]);
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub grad_norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingTrace {
    pub steps: Vec<StepRecord>,
    pub initial_probs: Vec<f64>,
    pub final_probs: Vec<f64>,
    pub learning_rate: f64,
}

/// Smoothness estimate for the default step size: the steepest gradient
/// difference ratio over random parameter probe pairs on a fixed batch.
fn estimate_smoothness(
    policy: &ToySoftmaxPolicy,
    batch: &PreferenceBatch,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let d = policy.theta.len();
    let mut worst = 1e-6f64;
    for _ in 0..100 {
        let mut a = policy.clone();
        let mut b = policy.clone();
        for i in 0..d {
            a.theta[i] = rng.gen_range(-1.0..1.0);
            b.theta[i] = rng.gen_range(-1.0..1.0);
        }
        let ga = bopo_gradient(&a, batch, beta).unwrap();
        let gb = bopo_gradient(&b, batch, beta).unwrap();
        let num: f64 = ga
            .iter()
            .zip(&gb)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = a
            .theta
            .iter()
            .zip(&b.theta)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        if den > 1e-12 {
            worst = worst.max(num / den);
        }
    }
    worst
}

/// Seeded SGD on the preference loss, sampling each step's batch from
/// the current policy. `learning_rate` None uses 1/(L sqrt(T)) with L
/// estimated from probe pairs.
pub fn train_toy(
    policy: &mut ToySoftmaxPolicy,
    inst: &Instance,
    steps: usize,
    learning_rate: Option<f64>,
    k: usize,
    beta: f64,
    seed: u64,
) -> Result<TrainingTrace, BopoError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(BopoError::InvalidBeta);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial_probs = policy.probabilities();
    let eta = match learning_rate {
        Some(e) => e,
        None => {
            // probe batch from the initial (uniform-ish) policy
            let probe: Vec<Solution> = (0..k.max(4))
                .map(|_| policy.solutions[policy.sample_index(&mut rng)].clone())
                .collect();
            let batch = build_pairs(inst, &probe).map_err(|_| BopoError::EmptyBatch)?;
            let l = if batch.is_empty() {
                1.0
            } else {
                estimate_smoothness(policy, &batch, beta, &mut rng)
            };
            1.0 / (l * (steps.max(1) as f64).sqrt())
        }
    };
    let mut trace = Vec::with_capacity(steps);
    for step in 0..steps {
        let samples: Vec<Solution> = (0..k)
            .map(|_| policy.solutions[policy.sample_index(&mut rng)].clone())
            .collect();
        let batch = build_pairs(inst, &samples).map_err(|_| BopoError::EmptyBatch)?;
        let (loss, grad_norm_sq) = if batch.is_empty() {
            (0.0, 0.0)
        } else {
            let loss = bopo_loss(policy, &batch, beta)?;
            let grad = bopo_gradient(policy, &batch, beta)?;
            for (t, g) in policy.theta.iter_mut().zip(&grad) {
                *t -= eta * g;
            }
            (loss, grad.iter().map(|g| g * g).sum())
        };
        trace.push(StepRecord {
            step,
            loss,
            grad_norm_sq,
        });
    }
    Ok(TrainingTrace {
        steps: trace,
        initial_probs,
        final_probs: policy.probabilities(),
        learning_rate: eta,
    })
}
