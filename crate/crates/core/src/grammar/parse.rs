//! Text-level parsing and rendering of solutions.
//!
//! Parsing tokenizes with longest match, validates the token stream
//! against the instance grammar's automaton (with an implicit end marker
//! at the end of input), then extracts the structured payload. The stated
//! objective value is only checked for grammatical shape; evaluators
//! recompute it from the instance.

use super::{build_grammar, grammar_to_pda, Grammar, Pda, TokenId};
use crate::error::GrammarError;
use crate::problems::{ProblemKind, Solution};

/// Grammar plus compiled automaton for one problem kind and size.
#[derive(Debug, Clone)]
pub struct GrammarEngine {
    pub kind: ProblemKind,
    pub size: usize,
    pub grammar: Grammar,
    pub pda: Pda,
}

impl GrammarEngine {
    pub fn new(kind: ProblemKind, size: usize) -> Result<Self, GrammarError> {
        let grammar = build_grammar(kind, size)?;
        let pda = grammar_to_pda(&grammar)?;
        Ok(GrammarEngine {
            kind,
            size,
            grammar,
            pda,
        })
    }

    /// Tokenizes and runs the automaton over the whole text, including
    /// the implicit end marker. Returns the token stream on success.
    pub fn validate_text(&self, text: &str) -> Result<Vec<TokenId>, GrammarError> {
        let vocab = &self.grammar.vocab;
        let tokens = vocab
            .tokenize(text)
            .map_err(|(offset, position)| GrammarError::Parse {
                offset,
                position,
                detail: "no vocabulary token matches here".into(),
            })?;
        let mut cfg = self.pda.initial();
        for (i, &t) in tokens.iter().enumerate() {
            cfg = self.pda.advance(&cfg, t).map_err(|_| {
                let offset: usize = tokens[..i].iter().map(|&u| vocab.literal(u).len()).sum();
                GrammarError::Parse {
                    offset,
                    position: i,
                    detail: format!("unexpected {:?}", vocab.literal(t)),
                }
            })?;
        }
        cfg = self
            .pda
            .advance(&cfg, vocab.eos())
            .map_err(|_| GrammarError::Parse {
                offset: text.len(),
                position: tokens.len(),
                detail: "input ends before the sentence is complete".into(),
            })?;
        debug_assert!(self.pda.is_accepting(&cfg));
        Ok(tokens)
    }

    pub fn parse(&self, text: &str) -> Result<Solution, GrammarError> {
        let tokens = self.validate_text(text)?;
        Ok(extract(self.kind, &self.grammar, &tokens))
    }

    pub fn write(&self, solution: &Solution, objective: f64) -> Result<String, GrammarError> {
        solution_to_text(self.kind, solution, objective)
    }
}

/// Payload extraction from an already validated token stream.
fn extract(kind: ProblemKind, grammar: &Grammar, tokens: &[TokenId]) -> Solution {
    let vocab = &grammar.vocab;
    let obj_tok = vocab.token_of("], Objective: ").unwrap();
    let open = vocab.token_of("[").unwrap();
    let close = vocab.token_of("]").unwrap();
    let body_end = tokens.iter().position(|&t| t == obj_tok).unwrap();
    let body = &tokens[1..body_end];

    let mut flat: Vec<usize> = Vec::new();
    let mut nested: Vec<Vec<usize>> = Vec::new();
    let mut current_list: Vec<usize> = Vec::new();
    let mut current_num: Option<usize> = None;
    let mut in_bracket = false;
    for &t in body {
        let lit = vocab.literal(t);
        if t == open {
            in_bracket = true;
            current_list.clear();
        } else if t == close {
            if let Some(v) = current_num.take() {
                current_list.push(v);
            }
            nested.push(std::mem::take(&mut current_list));
            in_bracket = false;
        } else if lit == ", " {
            if let Some(v) = current_num.take() {
                if in_bracket {
                    current_list.push(v);
                } else {
                    flat.push(v);
                }
            }
        } else {
            // digit token
            let d = (lit.as_bytes()[0] - b'0') as usize;
            current_num = Some(current_num.unwrap_or(0) * 10 + d);
        }
    }
    if let Some(v) = current_num.take() {
        flat.push(v);
    }

    match kind {
        ProblemKind::Tsp => Solution::Tour(flat),
        ProblemKind::Op => Solution::PrizeRoute(flat),
        ProblemKind::Cvrp => Solution::RouteSet(nested),
        ProblemKind::Mis | ProblemKind::Mvc => Solution::VertexSet(flat),
        ProblemKind::Pfsp => Solution::JobOrder(flat),
        ProblemKind::Jssp => Solution::MachineSchedules(nested),
    }
}

fn join(ids: &[usize]) -> String {
    ids.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders a solution in the instance output format with a two-decimal
/// objective. Nested kinds need at least one nonempty inner list to be
/// expressible.
pub fn solution_to_text(
    kind: ProblemKind,
    solution: &Solution,
    objective: f64,
) -> Result<String, GrammarError> {
    if !solution.fits(kind) {
        return Err(GrammarError::UnsupportedKind);
    }
    let tail = format!("], Objective: {:.2}", objective);
    let text = match solution {
        Solution::Tour(v) | Solution::VertexSet(v) | Solution::PrizeRoute(v)
        | Solution::JobOrder(v) => {
            let header = match kind {
                ProblemKind::Tsp | ProblemKind::Op => "Route: [",
                ProblemKind::Mis | ProblemKind::Mvc => "Set: [",
                ProblemKind::Pfsp => "Order: [",
                _ => unreachable!(),
            };
            if v.is_empty() && kind != ProblemKind::Op && kind != ProblemKind::Mis
                && kind != ProblemKind::Mvc
            {
                return Err(GrammarError::Parse {
                    offset: 0,
                    position: 0,
                    detail: "empty list is not expressible for this kind".into(),
                });
            }
            format!("{}{}{}", header, join(v), tail)
        }
        Solution::RouteSet(routes) | Solution::MachineSchedules(routes) => {
            let header = if kind == ProblemKind::Cvrp {
                "Routes: ["
            } else {
                "Schedule: ["
            };
            let nonempty: Vec<&Vec<usize>> = routes.iter().filter(|r| !r.is_empty()).collect();
            if nonempty.is_empty() {
                return Err(GrammarError::Parse {
                    offset: 0,
                    position: 0,
                    detail: "at least one nonempty inner list is required".into(),
                });
            }
            let inner = nonempty
                .iter()
                .map(|r| format!("[{}]", join(r)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{}{}{}", header, inner, tail)
        }
    };
    Ok(text)
}

/// One-shot convenience wrapper over [`GrammarEngine::parse`].
pub fn parse(kind: ProblemKind, size: usize, text: &str) -> Result<Solution, GrammarError> {
    GrammarEngine::new(kind, size)?.parse(text)
}

/// One-shot grammatical check; returns the token count on success.
pub fn check_text(kind: ProblemKind, size: usize, text: &str) -> Result<usize, GrammarError> {
    GrammarEngine::new(kind, size)?
        .validate_text(text)
        .map(|t| t.len())
}
