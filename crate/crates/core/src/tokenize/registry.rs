use std::fmt;

use serde::{Deserialize, Serialize};

use super::chars::extract_char;
use crate::error::{Error, Result};

/// Distinct-character count above which a language is character-tokenized.
pub const DEFAULT_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageId(String);

impl LanguageId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LanguageId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for LanguageId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone)]
pub struct LanguageEntry {
    pub id: LanguageId,
    pub corpus: Vec<String>,
    pub distinct_chars: usize,
    pub large_alphabet: bool,
}

/// Ordered set of languages with their training text.
///
/// Each language is either large-alphabet (more distinct characters than the
/// threshold) or not; the two groups partition the registry.
#[derive(Debug, Clone)]
pub struct LanguageRegistry {
    threshold: usize,
    entries: Vec<LanguageEntry>,
}

impl LanguageRegistry {
    pub fn new(threshold: usize) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::Config("threshold must be positive".into()));
        }
        Ok(Self {
            threshold,
            entries: Vec::new(),
        })
    }

    pub fn from_corpora<I, L>(threshold: usize, corpora: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, Vec<String>)>,
        L: Into<LanguageId>,
    {
        let mut reg = Self::new(threshold)?;
        for (id, corpus) in corpora {
            reg.add(id, corpus)?;
        }
        Ok(reg)
    }

    pub fn add(&mut self, id: impl Into<LanguageId>, corpus: Vec<String>) -> Result<()> {
        let id = id.into();
        if self.entries.iter().any(|e| e.id == id) {
            return Err(Error::DuplicateLanguage(id.to_string()));
        }
        let distinct_chars = extract_char(&corpus).len();
        self.entries.push(LanguageEntry {
            large_alphabet: distinct_chars > self.threshold,
            id,
            corpus,
            distinct_chars,
        });
        Ok(())
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn entries(&self) -> &[LanguageEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &LanguageId) -> Option<&LanguageEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }

    pub fn language_ids(&self) -> impl Iterator<Item = &LanguageId> {
        self.entries.iter().map(|e| &e.id)
    }

    /// Languages above the threshold (character-tokenized under the hybrid
    /// strategy).
    pub fn large_alphabet(&self) -> impl Iterator<Item = &LanguageEntry> {
        self.entries.iter().filter(|e| e.large_alphabet)
    }

    pub fn small_alphabet(&self) -> impl Iterator<Item = &LanguageEntry> {
        self.entries.iter().filter(|e| !e.large_alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_by_threshold() {
        let reg = LanguageRegistry::from_corpora(
            3,
            [
                ("small", vec!["ab".to_string()]),
                ("big", vec!["abcd".to_string()]),
                ("edge", vec!["abc".to_string()]),
            ],
        )
        .unwrap();
        let large: Vec<_> = reg.large_alphabet().map(|e| e.id.as_str()).collect();
        let small: Vec<_> = reg.small_alphabet().map(|e| e.id.as_str()).collect();
        assert_eq!(large, ["big"]);
        assert_eq!(small, ["small", "edge"]);
        assert_eq!(large.len() + small.len(), reg.len());
    }

    #[test]
    fn rejects_duplicates_and_zero_threshold() {
        assert!(LanguageRegistry::new(0).is_err());
        let mut reg = LanguageRegistry::new(5).unwrap();
        reg.add("x", vec!["a".into()]).unwrap();
        assert!(matches!(
            reg.add("x", vec!["b".into()]),
            Err(Error::DuplicateLanguage(_))
        ));
    }
}
