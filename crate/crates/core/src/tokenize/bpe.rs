use std::collections::HashMap;

use super::chars::{extract_char, CharVocab};
use super::words;
use crate::error::{Error, Result};

/// A BPE inventory: base characters plus the products of an ordered merge list.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordVocab {
    base_chars: CharVocab,
    merges: Vec<(String, String)>,
    tokens: Vec<String>,
    // Replay tables, derived from `tokens` and `merges`.
    symbol_ids: HashMap<String, u32>,
    ranks: HashMap<(u32, u32), (usize, u32)>,
}

/// One segment produced by replaying merges over a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Piece {
    /// Index into [`SubwordVocab::tokens`].
    Known(u32),
    /// A character outside the base alphabet. Never merged.
    Foreign(char),
}

impl SubwordVocab {
    /// Rebuilds an inventory from base characters and a merge list, replaying
    /// the merges to recover the token order.
    pub fn from_merges(base_chars: CharVocab, merges: Vec<(String, String)>) -> Result<Self> {
        let mut tokens: Vec<String> = base_chars.tokens().iter().map(|c| c.to_string()).collect();
        let mut symbol_ids: HashMap<String, u32> = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            symbol_ids.insert(t.clone(), i as u32);
        }
        let mut ranks = HashMap::new();
        for (rank, (left, right)) in merges.iter().enumerate() {
            let (Some(&l), Some(&r)) = (symbol_ids.get(left), symbol_ids.get(right)) else {
                return Err(Error::Parse {
                    what: "merge list",
                    line: rank + 1,
                    reason: format!("merge ({left:?}, {right:?}) uses an unknown token"),
                });
            };
            let product = format!("{left}{right}");
            let id = match symbol_ids.get(&product) {
                Some(&id) => id,
                None => {
                    let id = tokens.len() as u32;
                    symbol_ids.insert(product.clone(), id);
                    tokens.push(product);
                    id
                }
            };
            ranks.entry((l, r)).or_insert((rank, id));
        }
        Ok(Self {
            base_chars,
            merges,
            tokens,
            symbol_ids,
            ranks,
        })
    }

    pub fn base_chars(&self) -> &CharVocab {
        &self.base_chars
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub(crate) fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    /// Replays the merges, in learned order, over the characters of one word.
    pub(crate) fn segment_word(&self, word: &str) -> Vec<Piece> {
        let mut pieces: Vec<Piece> = word
            .chars()
            .map(|ch| {
                let mut buf = [0u8; 4];
                match self.symbol_ids.get(ch.encode_utf8(&mut buf) as &str) {
                    Some(&id) if (id as usize) < self.base_chars.len() => Piece::Known(id),
                    _ => Piece::Foreign(ch),
                }
            })
            .collect();
        let mut last_rank: Option<usize> = None;
        loop {
            // Lowest-ranked merge still ahead of the replay cursor.
            let mut best: Option<(usize, u32, u32, u32)> = None;
            for pair in pieces.windows(2) {
                if let [Piece::Known(l), Piece::Known(r)] = *pair {
                    if let Some(&(rank, product)) = self.ranks.get(&(l, r)) {
                        let ahead = last_rank.is_none_or(|last| rank > last);
                        if ahead && best.is_none_or(|b| rank < b.0) {
                            best = Some((rank, l, r, product));
                        }
                    }
                }
            }
            let Some((rank, l, r, product)) = best else {
                break;
            };
            let mut merged = Vec::with_capacity(pieces.len());
            let mut i = 0;
            while i < pieces.len() {
                if i + 1 < pieces.len()
                    && pieces[i] == Piece::Known(l)
                    && pieces[i + 1] == Piece::Known(r)
                {
                    merged.push(Piece::Known(product));
                    i += 2;
                } else {
                    merged.push(pieces[i]);
                    i += 1;
                }
            }
            pieces = merged;
            last_rank = Some(rank);
        }
        pieces
    }

    /// Segments a word into token strings; foreign characters come out as
    /// single-character strings.
    pub fn segment(&self, word: &str) -> Vec<String> {
        self.segment_word(word)
            .into_iter()
            .map(|p| match p {
                Piece::Known(id) => self.token(id).to_string(),
                Piece::Foreign(ch) => ch.to_string(),
            })
            .collect()
    }
}

/// Frequency-greedy BPE.
///
/// Pairs are counted inside words only, so merges never cross the word
/// separator. The most frequent pair wins; ties go to the pair that occurs
/// first in corpus scan order. Training stops at `size_cap` tokens or when no
/// adjacent pair is left.
pub fn train_bpe<S: AsRef<str>>(corpus: &[S], size_cap: usize) -> Result<SubwordVocab> {
    let base = extract_char(corpus);
    if size_cap < base.len() {
        return Err(Error::CapBelowAlphabet {
            cap: size_cap,
            alphabet: base.len(),
        });
    }

    let mut symbols: Vec<String> = base.tokens().iter().map(|c| c.to_string()).collect();
    let mut symbol_ids: HashMap<String, u32> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect();

    // Word types in first-occurrence order with their counts.
    let mut type_index: HashMap<&str, usize> = HashMap::new();
    let mut types: Vec<(Vec<u32>, usize)> = Vec::new();
    for line in corpus {
        for word in words(line.as_ref()) {
            match type_index.get(word) {
                Some(&i) => types[i].1 += 1,
                None => {
                    let ids = word
                        .chars()
                        .map(|c| symbol_ids[c.to_string().as_str()])
                        .collect();
                    type_index.insert(word, types.len());
                    types.push((ids, 1));
                }
            }
        }
    }

    let mut merges = Vec::new();
    while symbols.len() < size_cap {
        // pair -> (count, first occurrence as (word type, position))
        let mut counts: HashMap<(u32, u32), (usize, (usize, usize))> = HashMap::new();
        for (wi, (ids, count)) in types.iter().enumerate() {
            for (pos, pair) in ids.windows(2).enumerate() {
                let entry = counts.entry((pair[0], pair[1])).or_insert((0, (wi, pos)));
                entry.0 += count;
            }
        }
        let Some((&(left, right), _)) = counts
            .iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        else {
            break;
        };

        let product = format!("{}{}", symbols[left as usize], symbols[right as usize]);
        let product_id = match symbol_ids.get(&product) {
            Some(&id) => id,
            None => {
                let id = symbols.len() as u32;
                symbol_ids.insert(product.clone(), id);
                symbols.push(product);
                id
            }
        };
        merges.push((
            symbols[left as usize].clone(),
            symbols[right as usize].clone(),
        ));

        for (ids, _) in types.iter_mut() {
            if ids.len() < 2 {
                continue;
            }
            let mut out = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == left && ids[i + 1] == right {
                    out.push(product_id);
                    i += 2;
                } else {
                    out.push(ids[i]);
                    i += 1;
                }
            }
            *ids = out;
        }
    }

    let vocab = SubwordVocab::from_merges(base, merges)?;
    debug_assert_eq!(vocab.tokens, symbols);
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(l: &str, r: &str) -> (String, String) {
        (l.to_string(), r.to_string())
    }

    #[test]
    fn two_word_fixture() {
        let v = train_bpe(&["aaab", "aaab"], 4).unwrap();
        assert_eq!(v.merges(), &[pair("a", "a"), pair("aa", "a")]);
        assert_eq!(v.tokens(), &["a", "b", "aa", "aaa"]);
        assert_eq!(v.segment("aaab"), vec!["aaa", "b"]);
    }

    #[test]
    fn cap_equal_to_alphabet_means_no_merges() {
        let v = train_bpe(&["hello world", "low"], 8).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.merges().is_empty());
        assert_eq!(v.tokens().len(), v.base_chars().len());
    }

    #[test]
    fn single_possible_merge() {
        let v = train_bpe(&["xy"], 3).unwrap();
        assert_eq!(v.merges(), &[pair("x", "y")]);
        assert_eq!(v.tokens(), &["x", "y", "xy"]);
    }

    #[test]
    fn stops_when_no_pairs_remain() {
        let v = train_bpe(&["xy"], 100).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn cap_below_alphabet_is_an_error() {
        let err = train_bpe(&["abc"], 2).unwrap_err();
        assert!(matches!(err, Error::CapBelowAlphabet { cap: 2, alphabet: 3 }));
    }

    #[test]
    fn merges_never_cross_the_separator() {
        let v = train_bpe(&["a b a b a b"], 10).unwrap();
        assert!(v.merges().is_empty());
        assert!(v.tokens().iter().all(|t| !t.contains(' ') || t == " "));
    }

    #[test]
    fn replaying_merges_rederives_tokens() {
        let corpus = ["the cat sat on the mat", "that hat", "a tattered mat"];
        let v = train_bpe(&corpus, 20).unwrap();
        let rebuilt = SubwordVocab::from_merges(v.base_chars().clone(), v.merges().to_vec()).unwrap();
        assert_eq!(rebuilt.tokens(), v.tokens());
        for (l, r) in v.merges() {
            assert!(v.tokens().contains(&format!("{l}{r}")));
        }
    }

    #[test]
    fn foreign_characters_pass_through_unmerged() {
        let v = train_bpe(&["aaab", "aaab"], 4).unwrap();
        assert_eq!(v.segment("aazaa"), vec!["aa", "z", "aa"]);
    }
}
