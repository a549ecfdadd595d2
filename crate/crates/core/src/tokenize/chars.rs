use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Distinct characters of a corpus in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVocab {
    tokens: Vec<char>,
}

impl CharVocab {
    pub fn tokens(&self) -> &[char] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, ch: char) -> bool {
        self.tokens.contains(&ch)
    }
}

/// Every distinct character of `corpus` (the word separator included), ordered
/// by first occurrence.
pub fn extract_char<S: AsRef<str>>(corpus: &[S]) -> CharVocab {
    let mut seen = HashSet::new();
    let mut tokens = Vec::new();
    for line in corpus {
        for ch in line.as_ref().chars() {
            if seen.insert(ch) {
                tokens.push(ch);
            }
        }
    }
    CharVocab { tokens }
}
