//! Adaptive best-of-N sampling with a consistency statistic and a
//! Beta-Binomial confidence stopping rule, plus the closed-form
//! calculators the verification suites check against Monte Carlo runs.

use crate::decode::{sample_solution, DecodeConfig, PolicySource};
use crate::error::SamplerError;
use crate::grammar::GrammarEngine;
use crate::problems::{canonical_solution, check_feasibility, objective, Sense, Solution};
use crate::repair::repair;
use crate::Instance;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct SamplerConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// confidence threshold for early termination
    pub tau: f64,
    pub alpha0: f64,
    pub beta0: f64,
    /// when set, the stopping rule is evaluated only every `batch`
    /// samples instead of after each one
    pub batch: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_min: 8,
            n_max: 64,
            tau: 0.85,
            alpha0: 1.0,
            beta0: 1.0,
            batch: None,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), SamplerError> {
        let ok = self.n_min >= 1
            && self.n_min <= self.n_max
            && self.tau > 0.0
            && self.tau < 1.0
            && self.alpha0 > 0.0
            && self.beta0 > 0.0
            && self.batch.map_or(true, |b| b >= 1);
        if ok {
            Ok(())
        } else {
            Err(SamplerError::DomainError)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub text: String,
    pub solution: Solution,
    pub objective: f64,
    pub feasible_before_repair: bool,
}

#[derive(Debug, Clone)]
pub struct SampleTrace {
    pub records: Vec<SampleRecord>,
    pub samples_used: usize,
    pub terminated_early: bool,
    pub confidence: f64,
}

/// Fraction of ordered pairs of samples that agree, compared on
/// canonical forms.
pub fn consistency(samples: &[Solution]) -> Result<f64, SamplerError> {
    let k = samples.len();
    if k < 2 {
        return Err(SamplerError::TooFewSamples);
    }
    let canon: Vec<Solution> = samples.iter().map(canonical_solution).collect();
    let mut agree = 0usize;
    for i in 0..k {
        for j in 0..k {
            if i != j && canon[i] == canon[j] {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (k * (k - 1)) as f64)
}

/// Posterior probability that the next sample repeats `best`, under a
/// Beta(alpha0, beta0) prior on the repeat rate.
pub fn bayes_confidence(
    samples: &[Solution],
    best: &Solution,
    cfg: &SamplerConfig,
) -> Result<f64, SamplerError> {
    cfg.validate()?;
    let target = canonical_solution(best);
    let n_best = samples
        .iter()
        .filter(|s| canonical_solution(s) == target)
        .count();
    if n_best == 0 {
        return Err(SamplerError::BestNotInSamples);
    }
    Ok((cfg.alpha0 + n_best as f64) / (cfg.alpha0 + cfg.beta0 + samples.len() as f64))
}

fn draw_one(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    instance: &Instance,
    decode_cfg: &DecodeConfig,
    index: usize,
) -> Result<SampleRecord, SamplerError> {
    let mut cfg = *decode_cfg;
    // child seeds seed+i keep fixed-N and adaptive runs prefix-consistent
    cfg.seed = decode_cfg.seed.wrapping_add(index as u64);
    let raw = sample_solution(engine, policy, instance, &cfg)?;
    let feasible_before = check_feasibility(instance, &raw)?.feasible;
    let repaired = repair(instance, &raw)?.repaired;
    let value = objective(instance, &repaired)?;
    Ok(SampleRecord {
        text: crate::grammar::solution_to_text(instance.kind(), &repaired, value)
            .unwrap_or_default(),
        solution: repaired,
        objective: value,
        feasible_before_repair: feasible_before,
    })
}

fn best_index(records: &[SampleRecord], sense: Sense) -> usize {
    let signed = |v: f64| match sense {
        Sense::Min => v,
        Sense::Max => -v,
    };
    let mut best = 0usize;
    for i in 1..records.len() {
        if signed(records[i].objective) < signed(records[best].objective) {
            best = i;
        }
    }
    best
}

fn run_loop(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    instance: &Instance,
    decode_cfg: &DecodeConfig,
    cfg: &SamplerConfig,
    adaptive: bool,
) -> Result<(Solution, SampleTrace), SamplerError> {
    cfg.validate()?;
    let sense = instance.kind().sense();
    let mut records: Vec<SampleRecord> = Vec::new();
    let mut terminated_early = false;
    let mut confidence = 0.0;
    while records.len() < cfg.n_max {
        records.push(draw_one(engine, policy, instance, decode_cfg, records.len())?);
        let n = records.len();
        let at_boundary = cfg.batch.map_or(true, |b| n % b == 0 || n == cfg.n_max);
        if n < cfg.n_min || !at_boundary {
            continue;
        }
        let best = best_index(&records, sense);
        let sols: Vec<Solution> = records.iter().map(|r| r.solution.clone()).collect();
        confidence = bayes_confidence(&sols, &records[best].solution, cfg)?;
        if adaptive && confidence >= cfg.tau {
            terminated_early = n < cfg.n_max;
            break;
        }
    }
    let best = best_index(&records, sense);
    let solution = records[best].solution.clone();
    let trace = SampleTrace {
        samples_used: records.len(),
        terminated_early,
        confidence,
        records,
    };
    Ok((solution, trace))
}

/// Sample, repair, and keep the best until the confidence rule fires or
/// the sample budget runs out. Every returned solution is feasible.
pub fn adaptive_best_of_n(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    instance: &Instance,
    decode_cfg: &DecodeConfig,
    cfg: &SamplerConfig,
) -> Result<(Solution, SampleTrace), SamplerError> {
    run_loop(engine, policy, instance, decode_cfg, cfg, true)
}

/// Exactly `n` samples, no early stopping. Shares the child-seed scheme
/// with the adaptive loop, so its sample stream is a prefix-extension.
pub fn best_of_n(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    instance: &Instance,
    decode_cfg: &DecodeConfig,
    n: usize,
) -> Result<(Solution, SampleTrace), SamplerError> {
    let cfg = SamplerConfig {
        n_min: n,
        n_max: n,
        ..SamplerConfig::default()
    };
    run_loop(engine, policy, instance, decode_cfg, &cfg, false)
}

/// Samples needed so that at least one is feasible with probability
/// 1 - delta, when each is feasible independently with probability p_f.
pub fn expected_rejection_samples(p_f: f64, delta: f64) -> Result<u64, SamplerError> {
    if !(p_f > 0.0 && p_f < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(SamplerError::DomainError);
    }
    Ok(((1.0 / delta).ln() / (1.0 / (1.0 - p_f)).ln()).ceil() as u64)
}

/// Upper bound on the expected sample count of the adaptive loop when
/// each sample is near-optimal independently with probability q.
pub fn adaptive_bound(q: f64, n_min: usize, n_max: usize) -> Result<f64, SamplerError> {
    if !(q > 0.0 && q < 1.0) || n_min > n_max {
        return Err(SamplerError::DomainError);
    }
    Ok(n_min as f64 + (n_max - n_min) as f64 * (1.0 - q).powi(n_min as i32) / q)
}

/// Monte Carlo of the adaptive stopping model behind `adaptive_bound`:
/// each sample is near-optimal independently with probability q, and a
/// calibrated confidence rule terminates at the first check point
/// n >= n_min once a near-optimal sample has appeared. Returns the mean
/// sample count over `runs`.
pub fn simulate_adaptive_samples(
    q: f64,
    n_min: usize,
    n_max: usize,
    runs: usize,
    seed: u64,
) -> Result<f64, SamplerError> {
    if !(q > 0.0 && q < 1.0) || n_min < 1 || n_min > n_max || runs == 0 {
        return Err(SamplerError::DomainError);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0usize;
    for _ in 0..runs {
        let mut hit = false;
        let mut used = n_max;
        for n in 1..=n_max {
            hit = hit || rng.gen_bool(q);
            if n >= n_min && hit {
                used = n;
                break;
            }
        }
        total += used;
    }
    Ok(total as f64 / runs as f64)
}

/// Distribution of the single-sample optimality gap.
#[derive(Debug, Clone, Copy)]
pub enum GapDistribution {
    /// rate lambda; the best of N has mean 1/(N lambda)
    Exponential(f64),
    /// uniform on [0, hi]; handled by numeric tail integration
    Uniform(f64),
}

/// Expected best-of-N gap: closed form for the exponential, numeric
/// integration of (1 - F(x))^N elsewhere.
pub fn expected_gap(n: usize, dist: GapDistribution) -> Result<f64, SamplerError> {
    if n == 0 {
        return Err(SamplerError::DomainError);
    }
    match dist {
        GapDistribution::Exponential(lambda) => {
            if lambda <= 0.0 {
                return Err(SamplerError::InvalidDistribution(
                    "exponential rate must be positive".into(),
                ));
            }
            Ok(1.0 / (n as f64 * lambda))
        }
        GapDistribution::Uniform(hi) => {
            if hi <= 0.0 {
                return Err(SamplerError::InvalidDistribution(
                    "uniform upper bound must be positive".into(),
                ));
            }
            // E[min] = integral of survival^N over the support
            let steps = 100_000usize;
            let h = hi / steps as f64;
            let surv = |x: f64| (1.0 - x / hi).powi(n as i32);
            let mut acc = 0.0;
            for i in 0..steps {
                let a = i as f64 * h;
                acc += 0.5 * (surv(a) + surv(a + h)) * h;
            }
            Ok(acc)
        }
    }
}

/// Lemma check: the expected consistency of K i.i.d. draws equals the
/// collision probability sum p(y)^2. Returns (empirical, analytic).
pub fn consistency_expectation_check(
    probs: &[f64],
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), SamplerError> {
    if probs.is_empty() || probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(SamplerError::InvalidDistribution(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SamplerError::InvalidDistribution(format!(
            "probabilities sum to {}",
            total
        )));
    }
    if k < 2 {
        return Err(SamplerError::TooFewSamples);
    }
    let analytic: f64 = probs.iter().map(|p| p * p).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..trials {
        let draws: Vec<usize> = (0..k)
            .map(|_| {
                let mut u = rng.gen::<f64>();
                for (i, &p) in probs.iter().enumerate() {
                    u -= p;
                    if u <= 0.0 {
                        return i;
                    }
                }
                probs.len() - 1
            })
            .collect();
        let mut agree = 0usize;
        for i in 0..k {
            for j in 0..k {
                if i != j && draws[i] == draws[j] {
                    agree += 1;
                }
            }
        }
        acc += agree as f64 / (k * (k - 1)) as f64;
    }
    Ok((acc / trials as f64, analytic))
}
