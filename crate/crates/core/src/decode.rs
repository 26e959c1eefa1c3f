//! Grammar-constrained decoding over an abstract next-token policy.
//!
//! The decode loop queries the policy for logits, masks tokens the
//! automaton cannot consume, applies temperature, samples, and advances
//! the automaton until acceptance. Termination is guaranteed by the
//! token-budget guard in the grammar engine; every terminated decode
//! parses by construction.

use crate::error::DecodeError;
use crate::grammar::{default_token_budget, GrammarEngine, TokenId, Vocabulary};
use crate::problems::{Instance, ProblemKind, Solution};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Everything a policy may condition on. `decode_seed` identifies the
/// decode this query belongs to, so policy families can vary behavior
/// per sample while staying deterministic.
pub struct PolicyContext<'a> {
    pub prompt: &'a str,
    pub prefix: &'a [TokenId],
    pub vocab: &'a Vocabulary,
    pub decode_seed: u64,
}

/// Next-token score provider standing in for a language model. Must be
/// pure: identical contexts yield identical logits. Implementations are
/// queried from concurrent decodes and must be `Sync`, or cloned per
/// worker by the caller.
pub trait PolicySource: Sync {
    fn next_logits(&self, ctx: &PolicyContext) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct DecodeConfig {
    pub temperature: f64,
    pub seed: u64,
    /// argmax instead of sampling
    pub greedy: bool,
    /// overrides the grammar-engine default guard when set
    pub max_tokens: Option<usize>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            temperature: 0.7,
            seed: 0,
            greedy: false,
            max_tokens: None,
        }
    }
}

/// Canonical text serialization of the instance, used as the prompt.
pub fn render_prompt(instance: &Instance) -> String {
    instance.to_json()
}

/// Runs the constrained decode loop and returns the emitted token
/// sequence (end marker excluded).
pub fn decode_tokens(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    prompt: &str,
    config: &DecodeConfig,
) -> Result<Vec<TokenId>, DecodeError> {
    assert!(config.temperature > 0.0, "temperature must be positive");
    let pda = &engine.pda;
    let vocab = &engine.grammar.vocab;
    let budget = config
        .max_tokens
        .unwrap_or_else(|| default_token_budget(engine.size, None));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cfg = pda.initial();
    let mut out: Vec<TokenId> = Vec::new();
    while !pda.is_accepting(&cfg) {
        let valid = pda.valid_tokens_bounded(&cfg, budget);
        let token = if valid.len() == 1 {
            // forced move, no need to consult the policy
            valid.iter().next().unwrap()
        } else {
            let ctx = PolicyContext {
                prompt,
                prefix: &out,
                vocab,
                decode_seed: config.seed,
            };
            let logits = policy.next_logits(&ctx);
            for (i, &l) in logits.iter().enumerate() {
                if !l.is_finite() {
                    return Err(DecodeError::PolicyFailure(format!(
                        "token #{} ({:?})",
                        i,
                        vocab.literal(i as TokenId)
                    )));
                }
            }
            sample_masked(&logits, &valid, config, &mut rng)
        };
        cfg = pda.advance(&cfg, token).map_err(DecodeError::Grammar)?;
        if token != vocab.eos() {
            out.push(token);
        }
    }
    Ok(out)
}

/// Temperature softmax over the unmasked tokens; masked tokens have
/// probability exactly zero.
fn sample_masked(
    logits: &[f64],
    valid: &crate::grammar::TokenSet,
    config: &DecodeConfig,
    rng: &mut ChaCha8Rng,
) -> TokenId {
    let candidates: Vec<TokenId> = valid.iter().collect();
    let scaled: Vec<f64> = candidates
        .iter()
        .map(|&t| logits.get(t as usize).copied().unwrap_or(0.0) / config.temperature)
        .collect();
    if config.greedy {
        let mut best = 0usize;
        for i in 1..scaled.len() {
            if scaled[i] > scaled[best] {
                best = i;
            }
        }
        return candidates[best];
    }
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return candidates[i];
        }
    }
    *candidates.last().unwrap()
}

/// Decode to text.
pub fn decode(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    prompt: &str,
    config: &DecodeConfig,
) -> Result<String, DecodeError> {
    let tokens = decode_tokens(engine, policy, prompt, config)?;
    Ok(engine.grammar.vocab.detokenize(&tokens))
}

/// Decode then parse. Parsing cannot fail on our own output.
pub fn sample_solution(
    engine: &GrammarEngine,
    policy: &dyn PolicySource,
    instance: &Instance,
    config: &DecodeConfig,
) -> Result<Solution, DecodeError> {
    let prompt = render_prompt(instance);
    let mut config = *config;
    if config.max_tokens.is_none() {
        // schedule outputs grow with the machine count as well
        config.max_tokens = Some(default_token_budget(engine.size, instance.machines()));
    }
    let text = decode(engine, policy, &prompt, &config)?;
    engine.parse(&text).map_err(DecodeError::Grammar)
}

/// Uniform over whatever masking leaves available.
#[derive(Debug, Clone, Default)]
pub struct UniformValidPolicy;

impl PolicySource for UniformValidPolicy {
    fn next_logits(&self, ctx: &PolicyContext) -> Vec<f64> {
        vec![0.0; ctx.vocab.len()]
    }
}

/// Replays a fixed token sequence by boosting the scripted token at each
/// position; off-script positions fall back to a mild end preference.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    pub script: Vec<TokenId>,
    pub boost: f64,
}

impl ScriptedPolicy {
    pub fn from_text(vocab: &Vocabulary, text: &str) -> Result<Self, (usize, usize)> {
        Ok(ScriptedPolicy {
            script: vocab.tokenize(text)?,
            boost: 30.0,
        })
    }
}

impl PolicySource for ScriptedPolicy {
    fn next_logits(&self, ctx: &PolicyContext) -> Vec<f64> {
        let mut logits = vec![0.0; ctx.vocab.len()];
        match self.script.get(ctx.prefix.len()) {
            Some(&t) => logits[t as usize] = self.boost,
            None => logits[ctx.vocab.eos() as usize] = self.boost,
        }
        logits
    }
}

const LARGE: f64 = 1.0e4;

/// Problem-aware scores that make good solutions likelier. Supports
/// routing by nearest-neighbor scores and independent sets by inverse
/// degree; other kinds fall back to uniform. Node scoring assumes
/// single-digit ids (n <= 10).
#[derive(Debug, Clone)]
pub struct HeuristicPolicy {
    pub instance: Instance,
    pub beta: f64,
}

impl HeuristicPolicy {
    pub fn new(instance: Instance) -> Self {
        HeuristicPolicy {
            instance,
            beta: 5.0,
        }
    }

    /// Node ids emitted so far, from the single-digit prefix tokens.
    fn emitted(&self, ctx: &PolicyContext) -> Vec<usize> {
        let mut ids = Vec::new();
        for &t in ctx.prefix {
            let lit = ctx.vocab.literal(t);
            if lit.len() == 1 && lit.as_bytes()[0].is_ascii_digit() {
                ids.push((lit.as_bytes()[0] - b'0') as usize);
            }
        }
        ids
    }

    fn in_body(&self, ctx: &PolicyContext) -> bool {
        let obj = ctx.vocab.token_of("], Objective: ").unwrap();
        !ctx.prefix.contains(&obj)
    }
}

impl PolicySource for HeuristicPolicy {
    fn next_logits(&self, ctx: &PolicyContext) -> Vec<f64> {
        let n = self.instance.size();
        let mut logits = vec![0.0; ctx.vocab.len()];
        if n > 10 || !self.in_body(ctx) {
            // score the objective region mildly toward a short number
            if !self.in_body(ctx) {
                logits[ctx.vocab.eos() as usize] = LARGE;
                for d in 1..10u8 {
                    logits[ctx.vocab.digit(d) as usize] = -1.0;
                }
            }
            return logits;
        }
        let close = ctx.vocab.token_of("], Objective: ").unwrap() as usize;
        let visited = self.emitted(ctx);
        match self.instance.kind() {
            ProblemKind::Tsp => {
                let last = visited.last().copied().unwrap_or(0);
                let mut open = 0;
                for v in 0..n {
                    let slot = ctx.vocab.digit(v as u8) as usize;
                    if visited.contains(&v) {
                        logits[slot] = -LARGE;
                    } else {
                        logits[slot] = -self.beta * self.instance.dist(last, v);
                        open += 1;
                    }
                }
                logits[close] = if open == 0 { LARGE } else { -LARGE };
            }
            ProblemKind::Mis => {
                let edges: Vec<(usize, usize)> =
                    self.instance.edges().unwrap_or_default().to_vec();
                let mut degree = vec![0f64; n];
                for &(u, v) in &edges {
                    degree[u] += 1.0;
                    degree[v] += 1.0;
                }
                let blocked = |v: usize| {
                    visited.contains(&v)
                        || edges
                            .iter()
                            .any(|&(a, b)| (a == v && visited.contains(&b))
                                || (b == v && visited.contains(&a)))
                };
                let mut open = 0;
                for v in 0..n {
                    let slot = ctx.vocab.digit(v as u8) as usize;
                    if blocked(v) {
                        logits[slot] = -LARGE;
                    } else {
                        logits[slot] = -self.beta * degree[v] / n as f64;
                        open += 1;
                    }
                }
                logits[close] = if open == 0 { LARGE } else { -LARGE };
            }
            _ => {}
        }
        logits
    }
}
