//! Grammar to pushdown-automaton compilation.
//!
//! The automaton has a single control state; all structure lives on the
//! stack of grammar symbols. Construction left-factors the grammar until
//! every nonterminal's alternatives start with distinct symbols, then
//! builds an LL(1) prediction table from nullable/FIRST/FOLLOW sets.
//! An empty stack is the accepting configuration.

use super::{Grammar, NtId, Production, Symbol, TokenId, TokenSet};
use crate::error::GrammarError;

#[derive(Debug, Clone)]
pub struct Pda {
    names: Vec<String>,
    productions: Vec<Production>,
    start: NtId,
    nullable: Vec<bool>,
    first: Vec<TokenSet>,
    /// table[nt][token] = index into `productions`
    table: Vec<Vec<Option<usize>>>,
    /// fewest terminals derivable from each nonterminal
    min_yield: Vec<usize>,
    eos: TokenId,
}

/// Automaton configuration: symbol stack (top at the end) plus a count of
/// consumed tokens. The bottom-of-stack marker is implicit; an empty
/// stack means the input so far forms a complete sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdaConfiguration {
    pub stack: Vec<Symbol>,
    pub consumed: usize,
}

/// Splits alternatives sharing a first symbol into a common head plus a
/// fresh suffix nonterminal, repeating until no group remains.
fn left_factor(names: &mut Vec<String>, productions: &mut Vec<Production>) {
    loop {
        let mut changed = false;
        for a in 0..names.len() {
            let idxs: Vec<usize> = productions
                .iter()
                .enumerate()
                .filter(|(_, p)| p.lhs == a && !p.rhs.is_empty())
                .map(|(i, _)| i)
                .collect();
            let mut group: Option<(Symbol, Vec<usize>)> = None;
            for &i in &idxs {
                let head = productions[i].rhs[0];
                let members: Vec<usize> = idxs
                    .iter()
                    .copied()
                    .filter(|&j| productions[j].rhs[0] == head)
                    .collect();
                if members.len() >= 2 {
                    group = Some((head, members));
                    break;
                }
            }
            if let Some((head, members)) = group {
                let fresh = names.len();
                names.push(format!("{}'", names[a]));
                let mut suffixes = Vec::new();
                for &j in &members {
                    suffixes.push(Production {
                        lhs: fresh,
                        rhs: productions[j].rhs[1..].to_vec(),
                    });
                }
                // drop grouped alternatives, keep one factored head rule
                let member_set: Vec<usize> = members;
                let mut kept = Vec::with_capacity(productions.len());
                for (j, p) in productions.drain(..).enumerate() {
                    if !member_set.contains(&j) {
                        kept.push(p);
                    }
                }
                kept.push(Production {
                    lhs: a,
                    rhs: vec![head, Symbol::NonTerminal(fresh)],
                });
                kept.extend(suffixes);
                *productions = kept;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

fn first_of_seq(seq: &[Symbol], first: &[TokenSet], nullable: &[bool]) -> (TokenSet, bool) {
    let mut set = TokenSet::empty();
    for s in seq {
        match *s {
            Symbol::Terminal(t) => {
                set.insert(t);
                return (set, false);
            }
            Symbol::NonTerminal(a) => {
                set = set.union(first[a]);
                if !nullable[a] {
                    return (set, false);
                }
            }
        }
    }
    (set, true)
}

pub fn grammar_to_pda(g: &Grammar) -> Result<Pda, GrammarError> {
    g.validate()?;
    let mut names = g.nonterminal_names.clone();
    let mut productions = g.productions.clone();
    left_factor(&mut names, &mut productions);

    let n = names.len();
    let eos = g.vocab.eos();
    let nullable = g.nullable_set(&productions, n);

    let mut first = vec![TokenSet::empty(); n];
    loop {
        let mut changed = false;
        for p in &productions {
            let (set, _) = first_of_seq(&p.rhs, &first, &nullable);
            let merged = first[p.lhs].union(set);
            if merged != first[p.lhs] {
                first[p.lhs] = merged;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut follow = vec![TokenSet::empty(); n];
    follow[g.start].insert(eos);
    loop {
        let mut changed = false;
        for p in &productions {
            for (i, s) in p.rhs.iter().enumerate() {
                if let Symbol::NonTerminal(b) = *s {
                    let (set, tail_nullable) = first_of_seq(&p.rhs[i + 1..], &first, &nullable);
                    let mut merged = follow[b].union(set);
                    if tail_nullable {
                        merged = merged.union(follow[p.lhs]);
                    }
                    if merged != follow[b] {
                        follow[b] = merged;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let vocab_len = g.vocab.len();
    let mut table: Vec<Vec<Option<usize>>> = vec![vec![None; vocab_len]; n];
    for (pi, p) in productions.iter().enumerate() {
        let (mut predict, seq_nullable) = first_of_seq(&p.rhs, &first, &nullable);
        if seq_nullable {
            predict = predict.union(follow[p.lhs]);
        }
        for t in predict.iter() {
            let cell = &mut table[p.lhs][t as usize];
            match cell {
                Some(other) if *other != pi => {
                    return Err(GrammarError::NotDeterministic {
                        symbol: names[p.lhs].clone(),
                        token: g.vocab.literal(t).to_string(),
                    });
                }
                _ => *cell = Some(pi),
            }
        }
    }

    const INF: usize = usize::MAX / 4;
    let mut min_yield = vec![INF; n];
    loop {
        let mut changed = false;
        for p in &productions {
            let mut total = 0usize;
            for s in &p.rhs {
                total = total.saturating_add(match *s {
                    Symbol::Terminal(_) => 1,
                    Symbol::NonTerminal(a) => min_yield[a],
                });
            }
            if total < min_yield[p.lhs] {
                min_yield[p.lhs] = total;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    Ok(Pda {
        names,
        productions,
        start: g.start,
        nullable,
        first,
        table,
        min_yield,
        eos,
    })
}

impl Pda {
    pub fn initial(&self) -> PdaConfiguration {
        PdaConfiguration {
            stack: vec![Symbol::NonTerminal(self.start)],
            consumed: 0,
        }
    }

    pub fn is_accepting(&self, cfg: &PdaConfiguration) -> bool {
        cfg.stack.is_empty()
    }

    /// Tokens consumable from `cfg`. Scans the stack top-down, crossing
    /// nullable symbols; the end marker is valid exactly when the whole
    /// remaining stack can derive the empty string. Empty set iff
    /// accepting.
    pub fn valid_tokens(&self, cfg: &PdaConfiguration) -> TokenSet {
        if cfg.stack.is_empty() {
            return TokenSet::empty();
        }
        let mut set = TokenSet::empty();
        for s in cfg.stack.iter().rev() {
            match *s {
                Symbol::Terminal(t) => {
                    set.insert(t);
                    return set;
                }
                Symbol::NonTerminal(a) => {
                    set = set.union(self.first[a]);
                    if !self.nullable[a] {
                        return set;
                    }
                }
            }
        }
        set.insert(self.eos);
        set
    }

    /// Consumes one token, expanding nonterminals by the prediction table
    /// as needed. The end marker clears a fully nullable stack.
    pub fn advance(
        &self,
        cfg: &PdaConfiguration,
        token: TokenId,
    ) -> Result<PdaConfiguration, GrammarError> {
        let reject = |cfg: &PdaConfiguration| GrammarError::InvalidToken {
            token: self.token_name(token),
            position: cfg.consumed,
        };
        let mut next = cfg.clone();
        if token == self.eos {
            let all_nullable = next.stack.iter().all(|s| match s {
                Symbol::Terminal(_) => false,
                Symbol::NonTerminal(a) => self.nullable[*a],
            });
            if !all_nullable || next.stack.is_empty() {
                return Err(reject(cfg));
            }
            next.stack.clear();
            next.consumed += 1;
            return Ok(next);
        }
        loop {
            match next.stack.last().copied() {
                None => return Err(reject(cfg)),
                Some(Symbol::Terminal(t)) => {
                    if t == token {
                        next.stack.pop();
                        next.consumed += 1;
                        return Ok(next);
                    }
                    return Err(reject(cfg));
                }
                Some(Symbol::NonTerminal(a)) => match self.table[a][token as usize] {
                    Some(pi) => {
                        next.stack.pop();
                        for s in self.productions[pi].rhs.iter().rev() {
                            next.stack.push(*s);
                        }
                    }
                    None => return Err(reject(cfg)),
                },
            }
        }
    }

    /// Fewest further terminals needed to reach an accepting configuration
    /// (the end marker itself is not counted).
    pub fn min_completion_tokens(&self, cfg: &PdaConfiguration) -> usize {
        cfg.stack
            .iter()
            .map(|s| match *s {
                Symbol::Terminal(_) => 1,
                Symbol::NonTerminal(a) => self.min_yield[a],
            })
            .sum()
    }

    /// Valid tokens restricted so the decode can still finish within
    /// `budget` total consumed tokens. When nothing fits, falls back to
    /// the tokens on a shortest completion so generation terminates.
    pub fn valid_tokens_bounded(&self, cfg: &PdaConfiguration, budget: usize) -> TokenSet {
        let all = self.valid_tokens(cfg);
        let mut fitting = TokenSet::empty();
        let mut best = usize::MAX;
        let mut shortest = TokenSet::empty();
        for t in all.iter() {
            let next = match self.advance(cfg, t) {
                Ok(c) => c,
                Err(_) => continue,
            };
            // remaining cost counts the final end marker, so it strictly
            // decreases along the fallback path
            let rest = self.min_completion_tokens(&next)
                + usize::from(!self.is_accepting(&next));
            let total = next.consumed + rest;
            if total <= budget {
                fitting.insert(t);
            }
            match rest.cmp(&best) {
                std::cmp::Ordering::Less => {
                    best = rest;
                    shortest = TokenSet::empty();
                    shortest.insert(t);
                }
                std::cmp::Ordering::Equal => shortest.insert(t),
                std::cmp::Ordering::Greater => {}
            }
        }
        if fitting.is_empty() {
            shortest
        } else {
            fitting
        }
    }

    fn token_name(&self, token: TokenId) -> String {
        if token == self.eos {
            "<eos>".to_string()
        } else {
            format!("token #{}", token)
        }
    }

    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }
}
