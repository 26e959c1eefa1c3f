//! Shared token vocabulary: grammar literals are whole tokens, digits are
//! single tokens, plus one end-of-output marker.

use serde::{Deserialize, Serialize};

pub type TokenId = u16;

/// Bit set over the vocabulary (fits easily in 32 bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenSet(pub u32);

impl TokenSet {
    pub fn empty() -> Self {
        TokenSet(0)
    }
    pub fn insert(&mut self, t: TokenId) {
        self.0 |= 1 << t;
    }
    pub fn contains(self, t: TokenId) -> bool {
        self.0 & (1 << t) != 0
    }
    pub fn union(self, other: TokenSet) -> TokenSet {
        TokenSet(self.0 | other.0)
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
    pub fn iter(self) -> impl Iterator<Item = TokenId> {
        (0..32u16).filter(move |t| self.contains(*t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    literals: Vec<String>,
}

impl Vocabulary {
    /// The fixed literal-level vocabulary shared by all seven grammars.
    pub fn standard() -> Self {
        let mut literals: Vec<String> = [
            "Route: [",
            "Routes: [",
            "Set: [",
            "Order: [",
            "Schedule: [",
            "], Objective: ",
            "[",
            "]",
            ", ",
            ".",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for d in 0..10 {
            literals.push(d.to_string());
        }
        // End-of-output marker; never matched by the tokenizer.
        literals.push(String::new());
        Vocabulary { literals }
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn eos(&self) -> TokenId {
        (self.literals.len() - 1) as TokenId
    }

    pub fn literal(&self, t: TokenId) -> &str {
        &self.literals[t as usize]
    }

    pub fn token_of(&self, literal: &str) -> Option<TokenId> {
        self.literals
            .iter()
            .position(|l| !l.is_empty() && l == literal)
            .map(|i| i as TokenId)
    }

    pub fn digit(&self, d: u8) -> TokenId {
        debug_assert!(d < 10);
        self.token_of(&d.to_string()).unwrap()
    }

    /// Token sequence spelling a decimal index.
    pub fn spell_index(&self, value: usize) -> Vec<TokenId> {
        value
            .to_string()
            .bytes()
            .map(|b| self.digit(b - b'0'))
            .collect()
    }

    /// Longest-match tokenization. Returns the byte offset and token
    /// position of the first unmatchable character on failure.
    pub fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, (usize, usize)> {
        let mut tokens = Vec::new();
        let mut pos = 0usize;
        while pos < text.len() {
            let rest = &text[pos..];
            let best = self
                .literals
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.is_empty() && rest.starts_with(l.as_str()))
                .max_by_key(|(_, l)| l.len());
            match best {
                Some((id, l)) => {
                    tokens.push(id as TokenId);
                    pos += l.len();
                }
                None => return Err((pos, tokens.len())),
            }
        }
        Ok(tokens)
    }

    pub fn detokenize(&self, tokens: &[TokenId]) -> String {
        tokens.iter().map(|&t| self.literal(t)).collect()
    }
}
