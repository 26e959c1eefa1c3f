//! Output grammars for the seven problems, their pushdown-automaton form,
//! and the text parser/writer for solutions.
//!
//! Terminals are literal-level tokens (one token per fixed literal, one
//! per digit); see [`Vocabulary`]. Grammars are specialized per instance
//! so index productions cover exactly the valid range.

mod parse;
mod pda;
mod vocab;

pub use parse::{check_text, parse, solution_to_text, GrammarEngine};
pub use pda::{grammar_to_pda, Pda, PdaConfiguration};
pub use vocab::{TokenId, TokenSet, Vocabulary};

use crate::error::GrammarError;
use crate::problems::ProblemKind;

pub type NtId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Terminal(TokenId),
    NonTerminal(NtId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    pub lhs: NtId,
    pub rhs: Vec<Symbol>,
}

#[derive(Debug, Clone)]
pub struct Grammar {
    pub nonterminal_names: Vec<String>,
    pub start: NtId,
    pub productions: Vec<Production>,
    pub vocab: Vocabulary,
}

struct GrammarBuilder {
    names: Vec<String>,
    productions: Vec<Production>,
    vocab: Vocabulary,
}

impl GrammarBuilder {
    fn new() -> Self {
        GrammarBuilder {
            names: Vec::new(),
            productions: Vec::new(),
            vocab: Vocabulary::standard(),
        }
    }

    fn nt(&mut self, name: &str) -> NtId {
        self.names.push(name.to_string());
        self.names.len() - 1
    }

    fn lit(&self, s: &str) -> Symbol {
        Symbol::Terminal(self.vocab.token_of(s).expect("literal in vocabulary"))
    }

    fn rule(&mut self, lhs: NtId, rhs: Vec<Symbol>) {
        self.productions.push(Production { lhs, rhs });
    }

    /// Number / Digits / Digit productions shared by every grammar.
    fn number(&mut self) -> NtId {
        let number = self.nt("Number");
        let digits = self.nt("Digits");
        let digit = self.nt("Digit");
        self.rule(
            number,
            vec![
                Symbol::NonTerminal(digits),
                self.lit("."),
                Symbol::NonTerminal(digits),
            ],
        );
        self.rule(digits, vec![Symbol::NonTerminal(digit)]);
        self.rule(
            digits,
            vec![Symbol::NonTerminal(digit), Symbol::NonTerminal(digits)],
        );
        for d in 0..10u8 {
            let t = self.vocab.digit(d);
            self.rule(digit, vec![Symbol::Terminal(t)]);
        }
        number
    }

    /// Index nonterminal with one alternative per valid id; multi-digit
    /// ids are spelled as digit-token sequences.
    fn index(&mut self, name: &str, ids: impl Iterator<Item = usize>) -> NtId {
        let nt = self.nt(name);
        for id in ids {
            let rhs = self
                .vocab
                .spell_index(id)
                .into_iter()
                .map(Symbol::Terminal)
                .collect();
            self.rule(nt, rhs);
        }
        nt
    }

    /// `List -> Item | Item ", " List`
    fn comma_list(&mut self, name: &str, item: NtId) -> NtId {
        let list = self.nt(name);
        self.rule(list, vec![Symbol::NonTerminal(item)]);
        self.rule(
            list,
            vec![
                Symbol::NonTerminal(item),
                self.lit(", "),
                Symbol::NonTerminal(list),
            ],
        );
        list
    }

    fn finish(self, start: NtId) -> Result<Grammar, GrammarError> {
        let g = Grammar {
            nonterminal_names: self.names,
            start,
            productions: self.productions,
            vocab: self.vocab,
        };
        g.validate()?;
        Ok(g)
    }
}

/// Build the output grammar for `kind`, specialized to `size` nodes or jobs.
pub fn build_grammar(kind: ProblemKind, size: usize) -> Result<Grammar, GrammarError> {
    if size == 0 {
        return Err(GrammarError::UnsupportedKind);
    }
    let mut b = GrammarBuilder::new();
    let start = b.nt("S");
    let number = b.number();
    let obj = b.lit("], Objective: ");
    match kind {
        ProblemKind::Tsp => {
            let node = b.index("Node", 0..size);
            let list = b.comma_list("NodeList", node);
            let header = b.lit("Route: [");
            b.rule(start, vec![header, Symbol::NonTerminal(list), obj, Symbol::NonTerminal(number)]);
        }
        ProblemKind::Op => {
            let node = b.index("Node", 0..size);
            let list = b.comma_list("NodeList", node);
            let opt = b.nt("NodeListOpt");
            b.rule(opt, vec![]);
            b.rule(opt, vec![Symbol::NonTerminal(list)]);
            let header = b.lit("Route: [");
            b.rule(start, vec![header, Symbol::NonTerminal(opt), obj, Symbol::NonTerminal(number)]);
        }
        ProblemKind::Cvrp => {
            let node = b.index("Node", 0..size);
            let list = b.comma_list("NodeList", node);
            let route = b.nt("Route");
            b.rule(
                route,
                vec![b.lit("["), Symbol::NonTerminal(list), b.lit("]")],
            );
            let routes = b.comma_list("RouteList", route);
            let header = b.lit("Routes: [");
            b.rule(start, vec![header, Symbol::NonTerminal(routes), obj, Symbol::NonTerminal(number)]);
        }
        ProblemKind::Mis | ProblemKind::Mvc => {
            let node = b.index("Node", 0..size);
            let list = b.comma_list("NodeList", node);
            let opt = b.nt("NodeListOpt");
            b.rule(opt, vec![]);
            b.rule(opt, vec![Symbol::NonTerminal(list)]);
            let header = b.lit("Set: [");
            b.rule(start, vec![header, Symbol::NonTerminal(opt), obj, Symbol::NonTerminal(number)]);
        }
        ProblemKind::Pfsp => {
            let job = b.index("Job", 1..=size);
            let list = b.comma_list("JobList", job);
            let header = b.lit("Order: [");
            b.rule(start, vec![header, Symbol::NonTerminal(list), obj, Symbol::NonTerminal(number)]);
        }
        ProblemKind::Jssp => {
            let job = b.index("Job", 1..=size);
            let list = b.comma_list("JobList", job);
            let machine = b.nt("Machine");
            b.rule(
                machine,
                vec![b.lit("["), Symbol::NonTerminal(list), b.lit("]")],
            );
            let machines = b.comma_list("MachineList", machine);
            let header = b.lit("Schedule: [");
            b.rule(start, vec![header, Symbol::NonTerminal(machines), obj, Symbol::NonTerminal(number)]);
        }
    }
    b.finish(start)
}

impl Grammar {
    /// Checks declaredness of all symbols and absence of left recursion.
    pub fn validate(&self) -> Result<(), GrammarError> {
        let n = self.nonterminal_names.len();
        if self.start >= n {
            return Err(GrammarError::UndeclaredSymbol(
                format!("start #{}", self.start),
                "S".into(),
            ));
        }
        for p in &self.productions {
            if p.lhs >= n {
                return Err(GrammarError::UndeclaredSymbol(
                    format!("nonterminal #{}", p.lhs),
                    "lhs".into(),
                ));
            }
            for s in &p.rhs {
                match *s {
                    Symbol::NonTerminal(id) if id >= n => {
                        return Err(GrammarError::UndeclaredSymbol(
                            format!("nonterminal #{}", id),
                            self.nonterminal_names[p.lhs].clone(),
                        ));
                    }
                    Symbol::Terminal(t) if (t as usize) >= self.vocab.len() => {
                        return Err(GrammarError::UndeclaredSymbol(
                            format!("token #{}", t),
                            self.nonterminal_names[p.lhs].clone(),
                        ));
                    }
                    _ => {}
                }
            }
        }
        self.check_left_recursion()
    }

    pub(crate) fn nullable_set(&self, productions: &[Production], n: usize) -> Vec<bool> {
        let mut nullable = vec![false; n];
        loop {
            let mut changed = false;
            for p in productions {
                if nullable[p.lhs] {
                    continue;
                }
                let all = p.rhs.iter().all(|s| match s {
                    Symbol::Terminal(_) => false,
                    Symbol::NonTerminal(b) => nullable[*b],
                });
                if all {
                    nullable[p.lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                return nullable;
            }
        }
    }

    fn check_left_recursion(&self) -> Result<(), GrammarError> {
        let n = self.nonterminal_names.len();
        let nullable = self.nullable_set(&self.productions, n);
        // leftmost-reachability edges A -> B through nullable prefixes
        let mut edges: Vec<Vec<NtId>> = vec![Vec::new(); n];
        for p in &self.productions {
            for s in &p.rhs {
                match *s {
                    Symbol::Terminal(_) => break,
                    Symbol::NonTerminal(b) => {
                        edges[p.lhs].push(b);
                        if !nullable[b] {
                            break;
                        }
                    }
                }
            }
        }
        // cycle detection
        let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
        fn dfs(v: NtId, edges: &[Vec<NtId>], state: &mut [u8]) -> Option<NtId> {
            state[v] = 1;
            for &w in &edges[v] {
                match state[w] {
                    1 => return Some(w),
                    0 => {
                        if let Some(c) = dfs(w, edges, state) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            state[v] = 2;
            None
        }
        for v in 0..n {
            if state[v] == 0 {
                if let Some(c) = dfs(v, &edges, &mut state) {
                    return Err(GrammarError::LeftRecursion(
                        self.nonterminal_names[c].clone(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// BNF-like listing of the grammar, grouping alternatives per nonterminal.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, name) in self.nonterminal_names.iter().enumerate() {
            let alts: Vec<String> = self
                .productions
                .iter()
                .filter(|p| p.lhs == id)
                .map(|p| {
                    if p.rhs.is_empty() {
                        "ε".to_string()
                    } else {
                        p.rhs
                            .iter()
                            .map(|s| match *s {
                                Symbol::Terminal(t) => format!("{:?}", self.vocab.literal(t)),
                                Symbol::NonTerminal(b) => self.nonterminal_names[b].clone(),
                            })
                            .collect::<Vec<_>>()
                            .join(" ")
                    }
                })
                .collect();
            if !alts.is_empty() {
                out.push_str(&format!("{} -> {}\n", name, alts.join(" | ")));
            }
        }
        out
    }
}

/// Token budget guard for a decode: generous multiple of the shortest
/// sensible output length, so runaway list recursion is cut off.
pub fn default_token_budget(size: usize, machines: Option<usize>) -> usize {
    16 * (size + 4) * (1 + machines.unwrap_or(0))
}
