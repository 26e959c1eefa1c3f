use feasolve::grammar::{
    build_grammar, check_text, grammar_to_pda, parse, solution_to_text, Grammar, GrammarEngine,
    NtId, Production, Symbol, TokenId,
};
use feasolve::problems::ProblemKind;
use feasolve::Solution;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Memoized CFG derivability check, used as an independent oracle for the
/// automaton: can `nt` derive exactly tokens[lo..hi]?
struct Membership<'a> {
    g: &'a Grammar,
    memo: HashMap<(NtId, usize, usize), bool>,
    min_yield: Vec<usize>,
    prods_by_nt: Vec<Vec<usize>>,
}

impl<'a> Membership<'a> {
    fn new(g: &'a Grammar) -> Self {
        let n = g.nonterminal_names.len();
        let mut min_yield = vec![usize::MAX / 4; n];
        loop {
            let mut changed = false;
            for p in &g.productions {
                let total: usize = p
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Symbol::Terminal(_) => 1,
                        Symbol::NonTerminal(a) => min_yield[*a],
                    })
                    .sum();
                if total < min_yield[p.lhs] {
                    min_yield[p.lhs] = total;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut prods_by_nt = vec![Vec::new(); n];
        for (i, p) in g.productions.iter().enumerate() {
            prods_by_nt[p.lhs].push(i);
        }
        Membership {
            g,
            memo: HashMap::new(),
            min_yield,
            prods_by_nt,
        }
    }

    fn nt_derives(&mut self, nt: NtId, tokens: &[TokenId], lo: usize, hi: usize) -> bool {
        if let Some(&v) = self.memo.get(&(nt, lo, hi)) {
            return v;
        }
        if hi - lo < self.min_yield[nt] {
            return false;
        }
        self.memo.insert((nt, lo, hi), false); // guard against cycles
        let mut ok = false;
        for pi in self.prods_by_nt[nt].clone() {
            let rhs = self.g.productions[pi].rhs.clone();
            if self.seq_derives(&rhs, tokens, lo, hi) {
                ok = true;
                break;
            }
        }
        self.memo.insert((nt, lo, hi), ok);
        ok
    }

    fn seq_derives(&mut self, seq: &[Symbol], tokens: &[TokenId], lo: usize, hi: usize) -> bool {
        match seq.first() {
            None => lo == hi,
            Some(Symbol::Terminal(t)) => {
                lo < hi && tokens[lo] == *t && self.seq_derives(&seq[1..], tokens, lo + 1, hi)
            }
            Some(Symbol::NonTerminal(a)) => {
                let rest_min: usize = seq[1..]
                    .iter()
                    .map(|s| match s {
                        Symbol::Terminal(_) => 1,
                        Symbol::NonTerminal(b) => self.min_yield[*b],
                    })
                    .sum();
                for mid in lo..=hi.saturating_sub(rest_min) {
                    if self.nt_derives(*a, tokens, lo, mid)
                        && self.seq_derives(&seq[1..], tokens, mid, hi)
                    {
                        return true;
                    }
                }
                false
            }
        }
    }

    fn accepts(&mut self, tokens: &[TokenId]) -> bool {
        self.nt_derives(self.g.start, tokens, 0, tokens.len())
    }
}

fn pda_accepts(kind: ProblemKind, size: usize, tokens: &[TokenId]) -> bool {
    let g = build_grammar(kind, size).unwrap();
    let pda = grammar_to_pda(&g).unwrap();
    let mut cfg = pda.initial();
    for &t in tokens {
        match pda.advance(&cfg, t) {
            Ok(c) => cfg = c,
            Err(_) => return false,
        }
    }
    pda.advance(&cfg, g.vocab.eos()).is_ok()
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

#[test]
fn round_trip_examples() {
    let cases: Vec<(ProblemKind, usize, Solution, f64)> = vec![
        (ProblemKind::Tsp, 5, Solution::Tour(vec![0, 2, 4, 1, 3]), 3.5),
        (ProblemKind::Tsp, 12, Solution::Tour(vec![0, 11, 10, 3]), 12.0),
        (ProblemKind::Op, 6, Solution::PrizeRoute(vec![]), 0.0),
        (ProblemKind::Op, 6, Solution::PrizeRoute(vec![2, 5]), 7.25),
        (
            ProblemKind::Cvrp,
            6,
            Solution::RouteSet(vec![vec![1, 2], vec![3, 5, 4]]),
            9.0,
        ),
        (ProblemKind::Mis, 8, Solution::VertexSet(vec![0, 3, 7]), 3.0),
        (ProblemKind::Mvc, 8, Solution::VertexSet(vec![]), 0.0),
        (ProblemKind::Pfsp, 4, Solution::JobOrder(vec![2, 1, 4, 3]), 88.0),
        (
            ProblemKind::Jssp,
            3,
            Solution::MachineSchedules(vec![vec![1, 2, 3], vec![3, 1, 2]]),
            42.0,
        ),
    ];
    for (kind, size, sol, obj) in cases {
        let text = solution_to_text(kind, &sol, obj).unwrap();
        let back = parse(kind, size, &text).unwrap();
        assert_eq!(back, sol, "{}", text);
    }
}

#[test]
fn writer_formats_objective_two_decimals() {
    let text = solution_to_text(ProblemKind::Tsp, &Solution::Tour(vec![0, 1]), 3.14159).unwrap();
    assert_eq!(text, "Route: [0, 1], Objective: 3.14");
}

#[test]
fn rejects_out_of_range_index() {
    let err = parse(ProblemKind::Tsp, 3, "Route: [0, 3], Objective: 1.00").unwrap_err();
    let msg = format!("{}", err);
    assert!(msg.contains("byte 11"), "{}", msg);
    // multi-digit range edge: 12 ok for n=13, 13 is not
    assert!(parse(ProblemKind::Tsp, 13, "Route: [12], Objective: 1.00").is_ok());
    assert!(parse(ProblemKind::Tsp, 13, "Route: [13], Objective: 1.00").is_err());
}

#[test]
fn rejects_malformed_text() {
    // empty tour for TSP needs at least one node
    assert!(parse(ProblemKind::Tsp, 3, "Route: [], Objective: 1.00").is_err());
    // but OP and the set problems allow the empty list
    assert!(parse(ProblemKind::Op, 3, "Route: [], Objective: 0.00").is_ok());
    assert!(parse(ProblemKind::Mis, 3, "Set: [], Objective: 0.00").is_ok());
    // wrong header for kind
    assert!(parse(ProblemKind::Tsp, 3, "Set: [0], Objective: 1.00").is_err());
    // trailing garbage
    assert!(parse(ProblemKind::Tsp, 3, "Route: [0], Objective: 1.00x").is_err());
    assert!(parse(ProblemKind::Tsp, 3, "Route: [0], Objective: 1.00, ").is_err());
    // truncated
    assert!(parse(ProblemKind::Tsp, 3, "Route: [0], Objective: 1.").is_err());
    assert!(parse(ProblemKind::Tsp, 3, "Route: [0]").is_err());
    // integer objective is not a Number
    assert!(parse(ProblemKind::Tsp, 3, "Route: [0], Objective: 3").is_err());
    // leading-zero spelling "01" is not an index production
    assert!(parse(ProblemKind::Tsp, 3, "Route: [01], Objective: 1.00").is_err());
    // jobs are 1-based
    assert!(parse(ProblemKind::Pfsp, 3, "Order: [0], Objective: 1.00").is_err());
    assert!(parse(ProblemKind::Pfsp, 3, "Order: [3], Objective: 1.00").is_ok());
}

#[test]
fn nested_kinds_parse() {
    let s = parse(
        ProblemKind::Cvrp,
        6,
        "Routes: [[1, 2], [3]], Objective: 5.00",
    )
    .unwrap();
    assert_eq!(s, Solution::RouteSet(vec![vec![1, 2], vec![3]]));
    let s = parse(
        ProblemKind::Jssp,
        2,
        "Schedule: [[1, 2], [2, 1], [1, 2]], Objective: 9.00",
    )
    .unwrap();
    assert_eq!(
        s,
        Solution::MachineSchedules(vec![vec![1, 2], vec![2, 1], vec![1, 2]])
    );
    // a route cannot be empty
    assert!(parse(ProblemKind::Cvrp, 6, "Routes: [[]], Objective: 0.00").is_err());
    // bare nodes outside brackets are not routes
    assert!(parse(ProblemKind::Cvrp, 6, "Routes: [1, 2], Objective: 0.00").is_err());
}

#[test]
fn check_text_counts_tokens() {
    // "Route: [" 0 ", " 1 "], Objective: " 2 "." 5 0
    let n = check_text(ProblemKind::Tsp, 3, "Route: [0, 1], Objective: 2.50").unwrap();
    assert_eq!(n, 9);
}

#[test]
fn grammars_are_deterministic_for_all_kinds_and_sizes() {
    for kind in ALL_KINDS {
        for size in [1, 2, 3, 9, 10, 13, 64, 101] {
            let g = build_grammar(kind, size).unwrap();
            grammar_to_pda(&g).unwrap_or_else(|e| panic!("{:?} n={}: {}", kind, size, e));
        }
    }
}

#[test]
fn left_recursion_is_detected() {
    let g = build_grammar(ProblemKind::Tsp, 3).unwrap();
    let mut bad = g.clone();
    // A -> A "0" style rule on the list nonterminal
    let list = bad
        .nonterminal_names
        .iter()
        .position(|n| n == "NodeList")
        .unwrap();
    bad.productions.push(Production {
        lhs: list,
        rhs: vec![
            Symbol::NonTerminal(list),
            Symbol::Terminal(g.vocab.digit(0)),
        ],
    });
    assert!(matches!(
        bad.validate(),
        Err(feasolve::error::GrammarError::LeftRecursion(_))
    ));
    // hidden left recursion through a nullable prefix
    let mut hidden = g.clone();
    let opt = hidden.nonterminal_names.len();
    hidden.nonterminal_names.push("Opt".into());
    hidden.productions.push(Production { lhs: opt, rhs: vec![] });
    hidden.productions.push(Production {
        lhs: list,
        rhs: vec![Symbol::NonTerminal(opt), Symbol::NonTerminal(list)],
    });
    assert!(hidden.validate().is_err());
}

#[test]
fn undeclared_symbols_are_detected() {
    let g = build_grammar(ProblemKind::Tsp, 3).unwrap();
    let mut bad = g.clone();
    bad.productions.push(Production {
        lhs: 0,
        rhs: vec![Symbol::NonTerminal(999)],
    });
    assert!(matches!(
        bad.validate(),
        Err(feasolve::error::GrammarError::UndeclaredSymbol(_, _))
    ));
}

#[test]
fn dump_lists_every_nonterminal() {
    let g = build_grammar(ProblemKind::Cvrp, 4).unwrap();
    let text = g.dump();
    for name in ["S", "Number", "Digits", "Digit", "Node", "NodeList", "Route", "RouteList"] {
        assert!(text.contains(&format!("{} ->", name)), "missing {}", name);
    }
}

#[test]
fn valid_tokens_matches_advance_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in ALL_KINDS {
        for size in [1, 3, 13] {
            let g = build_grammar(kind, size).unwrap();
            let pda = grammar_to_pda(&g).unwrap();
            for _ in 0..200 {
                let mut cfg = pda.initial();
                // random walk through the automaton
                for _ in 0..300 {
                    let valid = pda.valid_tokens(&cfg);
                    assert_eq!(valid.is_empty(), pda.is_accepting(&cfg));
                    if valid.is_empty() {
                        break;
                    }
                    for t in 0..g.vocab.len() as TokenId {
                        let ok = pda.advance(&cfg, t).is_ok();
                        assert_eq!(ok, valid.contains(t), "{:?} token {}", kind, t);
                    }
                    let choices: Vec<TokenId> = valid.iter().collect();
                    let &t = choices.choose(&mut rng).unwrap();
                    cfg = pda.advance(&cfg, t).unwrap();
                }
            }
        }
    }
}

#[test]
fn min_completion_is_a_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for kind in ALL_KINDS {
        let g = build_grammar(kind, 5).unwrap();
        let pda = grammar_to_pda(&g).unwrap();
        for _ in 0..10 {
            let mut cfg = pda.initial();
            loop {
                let claimed = pda.min_completion_tokens(&cfg);
                // finish greedily by always taking a shortest-completion token,
                // preferring a token that accepts outright when there is a tie
                let mut probe = cfg.clone();
                let mut steps = 0usize;
                while !pda.is_accepting(&probe) {
                    let valid = pda.valid_tokens(&probe);
                    let best = valid
                        .iter()
                        .map(|t| {
                            let c = pda.advance(&probe, t).unwrap();
                            (pda.min_completion_tokens(&c), !pda.is_accepting(&c), t, c)
                        })
                        .min_by_key(|(m, open, _, _)| (*m, *open))
                        .unwrap();
                    if best.2 != g.vocab.eos() {
                        steps += 1;
                    }
                    probe = best.3;
                    assert!(steps <= claimed, "greedy probe overran for {:?}", kind);
                }
                assert_eq!(steps, claimed, "{:?}", kind);
                let valid = pda.valid_tokens_bounded(&cfg, 40);
                if valid.is_empty() {
                    break;
                }
                let choices: Vec<TokenId> = valid.iter().collect();
                let &t = choices.choose(&mut rng).unwrap();
                cfg = pda.advance(&cfg, t).unwrap();
            }
        }
    }
}

#[test]
fn automaton_agrees_with_cfg_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in ALL_KINDS {
        for size in [2, 13] {
            let g = build_grammar(kind, size).unwrap();
            let pda = grammar_to_pda(&g).unwrap();
            for trial in 0..60 {
                // sample a valid sentence via the automaton
                let mut cfg = pda.initial();
                let mut tokens: Vec<TokenId> = Vec::new();
                loop {
                    let valid = pda.valid_tokens_bounded(&cfg, 60);
                    let choices: Vec<TokenId> = valid.iter().collect();
                    let &t = choices.choose(&mut rng).unwrap();
                    cfg = pda.advance(&cfg, t).unwrap();
                    if pda.is_accepting(&cfg) {
                        break;
                    }
                    tokens.push(t);
                }
                let mut oracle = Membership::new(&g);
                assert!(oracle.accepts(&tokens), "{:?} {:?}", kind, tokens);
                // mutate: drop, duplicate, or substitute one token
                let mut mutant = tokens.clone();
                if !mutant.is_empty() {
                    let i = rng.gen_range(0..mutant.len());
                    match trial % 3 {
                        0 => {
                            mutant.remove(i);
                        }
                        1 => {
                            let t = mutant[i];
                            mutant.insert(i, t);
                        }
                        _ => {
                            mutant[i] = rng.gen_range(0..(g.vocab.len() as TokenId - 1));
                        }
                    }
                    let mut oracle = Membership::new(&g);
                    assert_eq!(
                        pda_accepts(kind, size, &mutant),
                        oracle.accepts(&mutant),
                        "{:?} {:?}",
                        kind,
                        mutant
                    );
                }
            }
        }
    }
}

#[test]
fn bounded_tokens_always_let_decodes_finish() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in ALL_KINDS {
        let engine = GrammarEngine::new(kind, 6).unwrap();
        let pda = &engine.pda;
        let budget = 40usize;
        for _ in 0..200 {
            let mut cfg = pda.initial();
            while !pda.is_accepting(&cfg) {
                let valid = pda.valid_tokens_bounded(&cfg, budget);
                assert!(!valid.is_empty());
                let choices: Vec<TokenId> = valid.iter().collect();
                let &t = choices.choose(&mut rng).unwrap();
                cfg = pda.advance(&cfg, t).unwrap();
                assert!(cfg.consumed <= budget + pda.min_completion_tokens(&cfg) + 1);
            }
        }
    }
}
