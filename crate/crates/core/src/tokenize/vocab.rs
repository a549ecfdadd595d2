use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bpe::{train_bpe, Piece, SubwordVocab};
use super::chars::{extract_char, CharVocab};
use super::registry::{LanguageId, LanguageRegistry};
use super::{BLANK_ID, UNK_ID, WORD_SEPARATOR};
use crate::error::{Error, Result};

pub const DEFAULT_SUBWORD_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    SharedChar,
    SharedCharSubword,
    #[serde(rename = "lang-specific", alias = "language-specific")]
    LanguageSpecific,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::SharedChar,
        Strategy::SharedCharSubword,
        Strategy::LanguageSpecific,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::SharedChar => "shared-char",
            Strategy::SharedCharSubword => "shared-char-subword",
            Strategy::LanguageSpecific => "lang-specific",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown vocabulary strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Blank,
    Unk,
    Char,
    Subword,
}

impl TokenKind {
    fn name(self) -> &'static str {
        match self {
            TokenKind::Blank => "blank",
            TokenKind::Unk => "unk",
            TokenKind::Char => "char",
            TokenKind::Subword => "subword",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "blank" => TokenKind::Blank,
            "unk" => TokenKind::Unk,
            "char" => TokenKind::Char,
            "subword" => TokenKind::Subword,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

/// Dense id space for one (sub-)vocabulary. Id 0 is always blank; id 1 is UNK
/// when the table carries one.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenTable {
    tokens: Vec<Token>,
    index: HashMap<String, u32>,
}

impl TokenTable {
    fn new(with_unk: bool) -> Self {
        let mut tokens = vec![Token {
            text: String::new(),
            kind: TokenKind::Blank,
        }];
        if with_unk {
            tokens.push(Token {
                text: String::new(),
                kind: TokenKind::Unk,
            });
        }
        Self {
            tokens,
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, text: &str) {
        if self.index.contains_key(text) {
            return;
        }
        let kind = if text.chars().count() == 1 {
            TokenKind::Char
        } else {
            TokenKind::Subword
        };
        self.index.insert(text.to_string(), self.tokens.len() as u32);
        self.tokens.push(Token {
            text: text.to_string(),
            kind,
        });
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_unk(&self) -> bool {
        self.tokens.get(UNK_ID as usize).map(|t| t.kind) == Some(TokenKind::Unk)
    }

    pub fn id(&self, text: &str) -> Option<u32> {
        self.index.get(text).copied()
    }

    pub fn token(&self, id: u32) -> Option<&Token> {
        self.tokens.get(id as usize)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Non-blank, non-UNK token strings in id order.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens
            .iter()
            .filter(|t| matches!(t.kind, TokenKind::Char | TokenKind::Subword))
            .map(|t| t.text.as_str())
    }
}

/// How one language's text is cut into tokens.
#[derive(Debug, Clone, PartialEq)]
pub enum Segmentation {
    Chars(CharVocab),
    Subwords(SubwordVocab),
}

#[derive(Debug, Clone, PartialEq)]
struct LanguageRules {
    language: LanguageId,
    segmentation: Segmentation,
    table: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodeMode {
    /// Out-of-vocabulary characters are an error.
    #[default]
    Strict,
    /// Out-of-vocabulary characters map to [`UNK_ID`]; needs a table built
    /// with UNK.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub subword_cap: usize,
    pub with_unk: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            subword_cap: DEFAULT_SUBWORD_CAP,
            with_unk: false,
        }
    }
}

/// Token inventory for one strategy, with per-language segmentation rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    strategy: Strategy,
    tables: Vec<TokenTable>,
    languages: Vec<LanguageRules>,
}

/// Builds the vocabulary for `strategy` over every language of the registry.
///
/// Under the hybrid and language-specific strategies a language is
/// character-tokenized iff its distinct character count exceeds the registry
/// threshold; otherwise BPE is trained with `subword_cap` (raised to the
/// alphabet size when the alphabet alone is larger, i.e. zero merges).
pub fn build_vocabulary(
    registry: &LanguageRegistry,
    strategy: Strategy,
    options: BuildOptions,
) -> Result<Vocabulary> {
    if registry.is_empty() {
        return Err(Error::Config("registry has no languages".into()));
    }
    let mut tables = Vec::new();
    let mut languages = Vec::new();
    if strategy != Strategy::LanguageSpecific {
        tables.push(TokenTable::new(options.with_unk));
    }
    for entry in registry.entries() {
        if entry.corpus.iter().all(|line| line.is_empty()) {
            return Err(Error::EmptyCorpus(entry.id.to_string()));
        }
        let use_chars = strategy == Strategy::SharedChar || entry.large_alphabet;
        let segmentation = if use_chars {
            Segmentation::Chars(extract_char(&entry.corpus))
        } else {
            let cap = options.subword_cap.max(entry.distinct_chars);
            Segmentation::Subwords(train_bpe(&entry.corpus, cap)?)
        };
        let table = if strategy == Strategy::LanguageSpecific {
            tables.push(TokenTable::new(options.with_unk));
            tables.len() - 1
        } else {
            0
        };
        match &segmentation {
            Segmentation::Chars(chars) => {
                let mut buf = [0u8; 4];
                for ch in chars.tokens() {
                    tables[table].insert(ch.encode_utf8(&mut buf));
                }
            }
            Segmentation::Subwords(sub) => {
                for t in sub.tokens() {
                    tables[table].insert(t);
                }
            }
        }
        languages.push(LanguageRules {
            language: entry.id.clone(),
            segmentation,
            table,
        });
    }
    Ok(Vocabulary {
        strategy,
        tables,
        languages,
    })
}

impl Vocabulary {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn tables(&self) -> &[TokenTable] {
        &self.tables
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageId> {
        self.languages.iter().map(|l| &l.language)
    }

    pub fn language_index(&self, language: &LanguageId) -> Option<usize> {
        self.languages.iter().position(|l| &l.language == language)
    }

    fn rules(&self, language: &LanguageId) -> Result<&LanguageRules> {
        self.languages
            .iter()
            .find(|l| &l.language == language)
            .ok_or_else(|| Error::UnknownLanguage(language.to_string()))
    }

    /// Index of the token table (model head) serving `language`.
    pub fn table_index(&self, language: &LanguageId) -> Result<usize> {
        Ok(self.rules(language)?.table)
    }

    pub fn table_for(&self, language: &LanguageId) -> Result<&TokenTable> {
        Ok(&self.tables[self.rules(language)?.table])
    }

    pub fn segmentation(&self, language: &LanguageId) -> Result<&Segmentation> {
        Ok(&self.rules(language)?.segmentation)
    }

    /// Whether `language` is character-tokenized in this vocabulary.
    pub fn is_char_tokenized(&self, language: &LanguageId) -> Result<bool> {
        Ok(matches!(self.segmentation(language)?, Segmentation::Chars(_)))
    }

    /// Total token count over all tables (blanks included).
    pub fn total_size(&self) -> usize {
        self.tables.iter().map(TokenTable::len).sum()
    }

    pub fn encode(&self, text: &str, language: &LanguageId, mode: EncodeMode) -> Result<Vec<u32>> {
        let table = self.table_for(language)?;
        let unk = (mode == EncodeMode::Lenient && table.has_unk()).then_some(UNK_ID);
        self.encode_with(text, language, unk)
    }

    /// Number of tokens `text` segments into, counting each character outside
    /// the vocabulary as one token (as an UNK would be).
    pub fn token_count(&self, text: &str, language: &LanguageId) -> Result<usize> {
        Ok(self.encode_with(text, language, Some(UNK_ID))?.len())
    }

    fn encode_with(&self, text: &str, language: &LanguageId, unk: Option<u32>) -> Result<Vec<u32>> {
        let rules = self.rules(language)?;
        let table = &self.tables[rules.table];
        let lookup = |ch: char| -> Result<u32> {
            let mut buf = [0u8; 4];
            match table.id(ch.encode_utf8(&mut buf)) {
                Some(id) => Ok(id),
                None if unk.is_some() => Ok(UNK_ID),
                None => Err(Error::OutOfVocabulary {
                    ch,
                    language: language.to_string(),
                }),
            }
        };
        let mut ids = Vec::with_capacity(text.len());
        match &rules.segmentation {
            Segmentation::Chars(_) => {
                for ch in text.chars() {
                    ids.push(lookup(ch)?);
                }
            }
            Segmentation::Subwords(sub) => {
                let mut first = true;
                for word in text.split(WORD_SEPARATOR) {
                    if !first {
                        ids.push(lookup(WORD_SEPARATOR)?);
                    }
                    first = false;
                    for piece in sub.segment_word(word) {
                        match piece {
                            Piece::Known(local) => {
                                let text = sub.token(local);
                                let id = table.id(text).expect("subword tokens are in the table");
                                ids.push(id);
                            }
                            Piece::Foreign(ch) => ids.push(lookup(ch)?),
                        }
                    }
                }
            }
        }
        Ok(ids)
    }

    /// Concatenates token strings. Blank ids are dropped; UNK decodes to U+FFFD.
    pub fn decode(&self, ids: &[u32], language: &LanguageId) -> Result<String> {
        let table = self.table_for(language)?;
        let mut out = String::new();
        for &id in ids {
            let token = table.token(id).ok_or(Error::TokenIdOutOfRange {
                id,
                size: table.len(),
            })?;
            match token.kind {
                TokenKind::Blank => {}
                TokenKind::Unk => out.push(char::REPLACEMENT_CHARACTER),
                TokenKind::Char | TokenKind::Subword => out.push_str(&token.text),
            }
        }
        Ok(out)
    }

    /// Serialises to one file per token table: a single `vocab.tsv` for the
    /// shared strategies, `vocab.NN.<language>.tsv` per language otherwise.
    pub fn to_files(&self) -> Vec<(String, String)> {
        self.tables
            .iter()
            .enumerate()
            .map(|(ti, table)| {
                let name = match self.strategy {
                    Strategy::LanguageSpecific => {
                        let lang = &self.languages.iter().find(|l| l.table == ti).unwrap().language;
                        format!("vocab.{ti:02}.{lang}.tsv")
                    }
                    _ => "vocab.tsv".to_string(),
                };
                (name, self.table_text(ti, table))
            })
            .collect()
    }

    fn table_text(&self, ti: usize, table: &TokenTable) -> String {
        let mut out = format!("#strategy\t{}\n", self.strategy);
        for (id, token) in table.tokens.iter().enumerate() {
            out.push_str(&format!(
                "{id}\t{}\t{}\n",
                escape(&token.text),
                token.kind.name()
            ));
        }
        for rules in self.languages.iter().filter(|l| l.table == ti) {
            match &rules.segmentation {
                Segmentation::Chars(chars) => {
                    let alphabet: String = chars.tokens().iter().collect();
                    out.push_str(&format!("#language\t{}\tchar\t{}\n", rules.language, escape(&alphabet)));
                }
                Segmentation::Subwords(sub) => {
                    let alphabet: String = sub.base_chars().tokens().iter().collect();
                    out.push_str(&format!(
                        "#language\t{}\tsubword\t{}\n",
                        rules.language,
                        escape(&alphabet)
                    ));
                    for (l, r) in sub.merges() {
                        out.push_str(&format!("#merge\t{}\t{}\n", escape(l), escape(r)));
                    }
                }
            }
        }
        out
    }

    /// Parses files produced by [`Vocabulary::to_files`], in table order.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        let mut strategy = None;
        let mut tables = Vec::new();
        let mut languages = Vec::new();
        for text in texts {
            let (st, table, rules) = parse_table(text.as_ref(), tables.len())?;
            if strategy.is_some_and(|s| s != st) {
                return Err(Error::Config("vocabulary files mix strategies".into()));
            }
            strategy = Some(st);
            tables.push(table);
            languages.extend(rules);
        }
        let strategy = strategy.ok_or_else(|| Error::Config("no vocabulary files".into()))?;
        if strategy != Strategy::LanguageSpecific && tables.len() != 1 {
            return Err(Error::Config(format!(
                "{strategy} vocabulary must be a single file, got {}",
                tables.len()
            )));
        }
        Ok(Self {
            strategy,
            tables,
            languages,
        })
    }
}

fn parse_table(text: &str, table_index: usize) -> Result<(Strategy, TokenTable, Vec<LanguageRules>)> {
    let err = |line: usize, reason: String| Error::Parse {
        what: "vocabulary file",
        line: line + 1,
        reason,
    };
    let mut strategy = None;
    let mut table = TokenTable {
        tokens: Vec::new(),
        index: HashMap::new(),
    };
    // (language, alphabet, is_subword, merges)
    let mut pending: Vec<(LanguageId, String, bool, Vec<(String, String)>)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            ["#strategy", name] => strategy = Some(name.parse::<Strategy>()?),
            ["#language", lang, mode, alphabet] => {
                let subword = match *mode {
                    "char" => false,
                    "subword" => true,
                    other => return Err(err(ln, format!("unknown segmentation {other:?}"))),
                };
                let alphabet = unescape(alphabet).map_err(|r| err(ln, r))?;
                pending.push((LanguageId::new(*lang), alphabet, subword, Vec::new()));
            }
            ["#merge", l, r] => {
                let last = pending
                    .last_mut()
                    .filter(|p| p.2)
                    .ok_or_else(|| err(ln, "merge outside a subword language".into()))?;
                last.3.push((
                    unescape(l).map_err(|r| err(ln, r))?,
                    unescape(r).map_err(|r| err(ln, r))?,
                ));
            }
            [id, token, kind] if !id.starts_with('#') => {
                let id: usize = id.parse().map_err(|_| err(ln, format!("bad id {id:?}")))?;
                if id != table.tokens.len() {
                    return Err(err(ln, format!("expected id {}, found {id}", table.tokens.len())));
                }
                let kind = TokenKind::parse(kind).ok_or_else(|| err(ln, format!("unknown kind {kind:?}")))?;
                let text = unescape(token).map_err(|r| err(ln, r))?;
                match kind {
                    TokenKind::Blank if id != BLANK_ID as usize => {
                        return Err(err(ln, "blank must have id 0".into()))
                    }
                    TokenKind::Unk if id != UNK_ID as usize => {
                        return Err(err(ln, "unk must have id 1".into()))
                    }
                    TokenKind::Char | TokenKind::Subword => {
                        if table.index.insert(text.clone(), id as u32).is_some() {
                            return Err(err(ln, format!("duplicate token {text:?}")));
                        }
                    }
                    _ => {}
                }
                table.tokens.push(Token { text, kind });
            }
            _ => return Err(err(ln, format!("unrecognised record {line:?}"))),
        }
    }
    let strategy = strategy.ok_or_else(|| err(0, "missing #strategy header".into()))?;
    if table.tokens.first().map(|t| t.kind) != Some(TokenKind::Blank) {
        return Err(err(0, "table has no blank".into()));
    }
    let mut rules = Vec::new();
    for (language, alphabet, subword, merges) in pending {
        let base = extract_char(&[alphabet]);
        let segmentation = if subword {
            Segmentation::Subwords(SubwordVocab::from_merges(base, merges)?)
        } else {
            Segmentation::Chars(base)
        };
        rules.push(LanguageRules {
            language,
            segmentation,
            table: table_index,
        });
    }
    Ok((strategy, table, rules))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ' ' => out.push_str("\\s"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('s') => out.push(' '),
            other => return Err(format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_serde_names_match_display() {
        for s in Strategy::ALL {
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
            assert_eq!(serde_json::from_str::<Strategy>(&json).unwrap(), s);
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
    }

    fn registry(threshold: usize, corpora: &[(&str, &[&str])]) -> LanguageRegistry {
        LanguageRegistry::from_corpora(
            threshold,
            corpora
                .iter()
                .map(|(id, lines)| (*id, lines.iter().map(|s| s.to_string()).collect())),
        )
        .unwrap()
    }

    fn lang(s: &str) -> LanguageId {
        LanguageId::new(s)
    }

    #[test]
    fn shared_char_is_the_union() {
        let reg = registry(512, &[("x", &["abc"]), ("y", &["bcd"])]);
        let v = build_vocabulary(&reg, Strategy::SharedChar, BuildOptions::default()).unwrap();
        assert_eq!(v.tables().len(), 1);
        assert_eq!(v.tables()[0].len(), 5);
        let texts: Vec<_> = v.tables()[0].texts().collect();
        assert_eq!(texts, ["a", "b", "c", "d"]);
        assert_eq!(v.tables()[0].token(0).unwrap().kind, TokenKind::Blank);
    }

    #[test]
    fn hybrid_uses_threshold_rule() {
        let reg = registry(3, &[("big", &["abcd dcba"]), ("small", &["xy xy xy"])]);
        let v = build_vocabulary(
            &reg,
            Strategy::SharedCharSubword,
            BuildOptions {
                subword_cap: 4,
                with_unk: false,
            },
        )
        .unwrap();
        assert!(v.is_char_tokenized(&lang("big")).unwrap());
        assert!(!v.is_char_tokenized(&lang("small")).unwrap());
        let texts: Vec<_> = v.tables()[0].texts().collect();
        assert_eq!(texts, ["a", "b", "c", "d", " ", "x", "y", "xy"]);
        assert_eq!(v.encode("xy xy", &lang("small"), EncodeMode::Strict).unwrap(), vec![8, 5, 8]);
    }

    #[test]
    fn language_specific_gives_each_language_a_blank() {
        let reg = registry(512, &[("x", &["ab"]), ("y", &["ab"])]);
        let v = build_vocabulary(&reg, Strategy::LanguageSpecific, BuildOptions::default()).unwrap();
        assert_eq!(v.tables().len(), 2);
        for table in v.tables() {
            let blanks = table.tokens().iter().filter(|t| t.kind == TokenKind::Blank).count();
            assert_eq!(blanks, 1);
            assert_eq!(table.token(0).unwrap().kind, TokenKind::Blank);
        }
        assert_eq!(v.table_index(&lang("y")).unwrap(), 1);
    }

    #[test]
    fn alphabet_larger_than_cap_falls_back_to_characters() {
        let reg = registry(1_000_000, &[("x", &["abcdef"])]);
        let v = build_vocabulary(
            &reg,
            Strategy::SharedCharSubword,
            BuildOptions {
                subword_cap: 3,
                with_unk: false,
            },
        )
        .unwrap();
        match v.segmentation(&lang("x")).unwrap() {
            Segmentation::Subwords(sub) => assert!(sub.merges().is_empty()),
            Segmentation::Chars(_) => panic!("expected subword segmentation"),
        }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let reg = registry(512, &[("x", &[""])]);
        assert!(matches!(
            build_vocabulary(&reg, Strategy::SharedChar, BuildOptions::default()),
            Err(Error::EmptyCorpus(_))
        ));
    }

    #[test]
    fn encode_replays_merges() {
        let reg = registry(512, &[("x", &["aaab", "aaab"])]);
        let v = build_vocabulary(
            &reg,
            Strategy::LanguageSpecific,
            BuildOptions {
                subword_cap: 4,
                with_unk: false,
            },
        )
        .unwrap();
        let ids = v.encode("aaab", &lang("x"), EncodeMode::Strict).unwrap();
        let table = v.table_for(&lang("x")).unwrap();
        let texts: Vec<_> = ids.iter().map(|&i| table.token(i).unwrap().text.as_str()).collect();
        assert_eq!(texts, ["aaa", "b"]);
        assert_eq!(v.decode(&ids, &lang("x")).unwrap(), "aaab");
        assert!(v.encode("", &lang("x"), EncodeMode::Strict).unwrap().is_empty());
    }

    #[test]
    fn strict_mode_names_the_missing_character() {
        let reg = registry(512, &[("x", &["ab"])]);
        let v = build_vocabulary(&reg, Strategy::SharedChar, BuildOptions::default()).unwrap();
        let err = v.encode("abz", &lang("x"), EncodeMode::Strict).unwrap_err();
        assert!(matches!(err, Error::OutOfVocabulary { ch: 'z', .. }));
        assert!(err.to_string().contains("'z'"));
    }

    #[test]
    fn lenient_mode_maps_to_unk() {
        let reg = registry(512, &[("x", &["ab"])]);
        let opts = BuildOptions {
            with_unk: true,
            ..BuildOptions::default()
        };
        let v = build_vocabulary(&reg, Strategy::SharedChar, opts).unwrap();
        let ids = v.encode("azb", &lang("x"), EncodeMode::Lenient).unwrap();
        assert_eq!(ids, vec![2, UNK_ID, 3]);
        assert_eq!(v.decode(&ids, &lang("x")).unwrap(), "a\u{FFFD}b");
        // Without a UNK entry lenient mode still errors.
        let strict = build_vocabulary(&reg, Strategy::SharedChar, BuildOptions::default()).unwrap();
        assert!(strict.encode("z", &lang("x"), EncodeMode::Lenient).is_err());
    }

    #[test]
    fn decode_drops_blank_and_rejects_bad_ids() {
        let reg = registry(512, &[("x", &["ab"])]);
        let v = build_vocabulary(&reg, Strategy::SharedChar, BuildOptions::default()).unwrap();
        assert_eq!(v.decode(&[BLANK_ID], &lang("x")).unwrap(), "");
        assert!(matches!(
            v.decode(&[99], &lang("x")),
            Err(Error::TokenIdOutOfRange { id: 99, size: 3 })
        ));
        assert!(matches!(v.decode(&[1], &lang("nope")), Err(Error::UnknownLanguage(_))));
    }

    #[test]
    fn file_format_reloads_byte_exactly() {
        let reg = registry(
            4,
            &[
                ("big", &["a\tb\\c d e", "edcba"]),
                ("small", &["the cat sat", "on the mat"]),
            ],
        );
        for strategy in Strategy::ALL {
            let v = build_vocabulary(
                &reg,
                strategy,
                BuildOptions {
                    subword_cap: 16,
                    with_unk: true,
                },
            )
            .unwrap();
            let files = v.to_files();
            let texts: Vec<&str> = files.iter().map(|(_, t)| t.as_str()).collect();
            let back = Vocabulary::from_texts(&texts).unwrap();
            assert_eq!(back, v);
            assert_eq!(back.to_files(), files);
        }
    }

    #[test]
    fn strategy_names_parse() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("bytes".parse::<Strategy>().is_err());
    }
}
