//! Character, subword and hybrid vocabularies.
//!
//! Three strategies are supported:
//!
//! * [`Strategy::SharedChar`]: the union of every language's characters.
//! * [`Strategy::SharedCharSubword`]: characters for languages whose distinct
//!   character count exceeds the registry threshold, BPE subwords for the rest,
//!   all unioned into one table.
//! * [`Strategy::LanguageSpecific`]: one table per language (each with its own
//!   blank), characters or subwords chosen by the same threshold rule.
//!
//! Words are separated by [`WORD_SEPARATOR`], which is itself a token in every
//! vocabulary and is never merged by BPE.

mod bpe;
mod chars;
mod registry;
mod stats;
mod vocab;

pub use bpe::{train_bpe, SubwordVocab};
pub use chars::{extract_char, CharVocab};
pub use registry::{LanguageEntry, LanguageId, LanguageRegistry, DEFAULT_THRESHOLD};
pub use stats::{tokens_per_second_stats, LanguageRate, StatsSummary};
pub use vocab::{
    build_vocabulary, BuildOptions, EncodeMode, Segmentation, Strategy, Token, TokenKind,
    TokenTable, Vocabulary, DEFAULT_SUBWORD_CAP,
};

/// Word boundary marker. One token in every vocabulary.
pub const WORD_SEPARATOR: char = ' ';

/// Reserved id of the blank symbol in every (sub-)vocabulary.
pub const BLANK_ID: u32 = 0;

/// Reserved id of the unknown-character token when a vocabulary carries one.
pub const UNK_ID: u32 = 1;

/// Splits a transcript into words on [`WORD_SEPARATOR`], dropping empty pieces.
pub(crate) fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(WORD_SEPARATOR).filter(|w| !w.is_empty())
}
