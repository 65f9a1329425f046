//! Tokenization, stop-list handling and adjacent-bigram counting.
//!
//! Stop words break adjacency: a pair is formed only from two strictly
//! consecutive tokens that are both absent from the stop list. Unigram and
//! marginal counts live in the same filtered universe as the pair counts.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::measures::BigramStats;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },
}

/// Default punctuation separators, ASCII and Arabic.
pub const DEFAULT_PUNCTUATION: &str = ".,;:!?\u{061F}\u{060C}\u{061B}\"'()[]{}";

const TATWEEL: char = '\u{0640}';

/// Arabic short-vowel and related marks removed by diacritic stripping.
fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}' | '\u{0610}'..='\u{061A}' | '\u{06D6}'..='\u{06ED}')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerConfig {
    /// Characters that split tokens in addition to Unicode whitespace.
    pub punctuation: BTreeSet<char>,
    pub strip_diacritics: bool,
    pub strip_tatweel: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            punctuation: DEFAULT_PUNCTUATION.chars().collect(),
            strip_diacritics: false,
            strip_tatweel: false,
        }
    }
}

impl TokenizerConfig {
    pub fn with_punctuation(chars: &str) -> Self {
        TokenizerConfig {
            punctuation: chars.chars().collect(),
            ..Default::default()
        }
    }

    pub fn is_separator(&self, c: char) -> bool {
        c.is_whitespace() || self.punctuation.contains(&c)
    }

    /// Applies the configured character normalization to a single word.
    pub fn normalize(&self, word: &str) -> String {
        word.chars()
            .filter(|&c| !(self.strip_diacritics && is_arabic_diacritic(c)))
            .filter(|&c| !(self.strip_tatweel && c == TATWEEL))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub position: usize,
}

/// Checks that `bytes` is UTF-8, reporting the offset of the first bad byte.
pub fn decode(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| CorpusError::Decode {
        offset: e.valid_up_to(),
    })
}

pub fn tokenize(text: &str, rules: &TokenizerConfig) -> Vec<Token> {
    text.split(|c| rules.is_separator(c))
        .filter(|piece| !piece.is_empty())
        .map(|piece| rules.normalize(piece))
        .filter(|word| !word.is_empty())
        .enumerate()
        .map(|(position, text)| Token { text, position })
        .collect()
}

pub fn tokenize_bytes(bytes: &[u8], rules: &TokenizerConfig) -> Result<Vec<Token>, CorpusError> {
    decode(bytes).map(|text| tokenize(text, rules))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    entries: BTreeSet<String>,
}

impl StopList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses one entry per line. Blank lines and `#` comments are skipped.
    pub fn parse(contents: &str, rules: &TokenizerConfig) -> Self {
        let entries = contents
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(|line| rules.normalize(line))
            .filter(|word| !word.is_empty())
            .collect();
        StopList { entries }
    }

    pub fn parse_bytes(bytes: &[u8], rules: &TokenizerConfig) -> Result<Self, CorpusError> {
        decode(bytes).map(|text| Self::parse(text, rules))
    }

    pub fn insert(&mut self, word: impl Into<String>) {
        self.entries.insert(word.into());
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for StopList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopList {
            entries: iter.into_iter().map(Into::into).collect(),
        }
    }
}

pub type Bigram = (String, String);

/// Pair, unigram and positional marginal counts over the filtered corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BigramTable {
    pairs: BTreeMap<Bigram, u64>,
    unigrams: BTreeMap<String, u64>,
    /// Number of counted pairs with the word in first position.
    left: BTreeMap<String, u64>,
    /// Number of counted pairs with the word in second position.
    right: BTreeMap<String, u64>,
    n_pairs: u64,
    n_tokens: u64,
}

impl BigramTable {
    pub fn pairs(&self) -> &BTreeMap<Bigram, u64> {
        &self.pairs
    }

    pub fn unigrams(&self) -> &BTreeMap<String, u64> {
        &self.unigrams
    }

    pub fn unigram(&self, word: &str) -> u64 {
        self.unigrams.get(word).copied().unwrap_or(0)
    }

    pub fn count(&self, w1: &str, w2: &str) -> u64 {
        self.pairs
            .get(&(w1.to_owned(), w2.to_owned()))
            .copied()
            .unwrap_or(0)
    }

    /// N: total number of counted pair positions.
    pub fn pair_tokens(&self) -> u64 {
        self.n_pairs
    }

    /// Number of distinct bigram types.
    pub fn distinct_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// T: corpus token count, stop words included.
    pub fn corpus_tokens(&self) -> u64 {
        self.n_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Contingency counts for a pair, using positional marginals so that
    /// the four cells of the 2x2 table are all non-negative.
    pub fn stats(&self, w1: &str, w2: &str) -> BigramStats {
        BigramStats {
            c12: self.count(w1, w2),
            c1: self.left.get(w1).copied().unwrap_or(0),
            c2: self.right.get(w2).copied().unwrap_or(0),
            n: self.n_pairs,
        }
    }
}

pub fn extract_bigrams(tokens: &[Token], stoplist: &StopList) -> BigramTable {
    let mut table = BigramTable {
        n_tokens: tokens.len() as u64,
        ..Default::default()
    };
    let mut prev: Option<&str> = None;
    for token in tokens {
        if stoplist.contains(&token.text) {
            prev = None;
            continue;
        }
        let word = token.text.as_str();
        *table.unigrams.entry(word.to_owned()).or_insert(0) += 1;
        if let Some(w1) = prev {
            *table
                .pairs
                .entry((w1.to_owned(), word.to_owned()))
                .or_insert(0) += 1;
            *table.left.entry(w1.to_owned()).or_insert(0) += 1;
            *table.right.entry(word.to_owned()).or_insert(0) += 1;
            table.n_pairs += 1;
        }
        prev = Some(word);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<Token> {
        words
            .iter()
            .enumerate()
            .map(|(position, w)| Token {
                text: (*w).to_owned(),
                position,
            })
            .collect()
    }

    fn texts(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn whitespace_split_arabic() {
        let tokens = tokenize("قال رسول الله", &TokenizerConfig::default());
        assert_eq!(texts(&tokens), ["قال", "رسول", "الله"]);
        assert_eq!(tokens[2].position, 2);
    }

    #[test]
    fn separators_collapse() {
        let tokens = tokenize("a,b  c", &TokenizerConfig::default());
        assert_eq!(texts(&tokens), ["a", "b", "c"]);
        let only_comma = TokenizerConfig::with_punctuation(",");
        assert_eq!(texts(&tokenize("a,b  c", &only_comma)), ["a", "b", "c"]);
    }

    #[test]
    fn empty_corpus() {
        assert!(tokenize("", &TokenizerConfig::default()).is_empty());
        assert!(tokenize(" \n\t ", &TokenizerConfig::default()).is_empty());
    }

    #[test]
    fn arabic_punctuation_separates() {
        let tokens = tokenize("قال،رسول؟ الله؛", &TokenizerConfig::default());
        assert_eq!(texts(&tokens), ["قال", "رسول", "الله"]);
    }

    #[test]
    fn diacritics_and_tatweel_stripping() {
        let mut rules = TokenizerConfig::default();
        assert_eq!(texts(&tokenize("مَكَّةَ", &rules)), ["مَكَّةَ"]);
        rules.strip_diacritics = true;
        assert_eq!(texts(&tokenize("مَكَّةَ", &rules)), ["مكة"]);
        rules.strip_tatweel = true;
        assert_eq!(texts(&tokenize("الـلـه ـ", &rules)), ["الله"]);
    }

    #[test]
    fn decode_reports_offset() {
        let bytes = b"ab\xffcd";
        assert_eq!(decode(bytes), Err(CorpusError::Decode { offset: 2 }));
        assert!(tokenize_bytes("ok".as_bytes(), &TokenizerConfig::default()).is_ok());
        assert!(StopList::parse_bytes(b"\xc3", &TokenizerConfig::default()).is_err());
    }

    #[test]
    fn stoplist_parsing() {
        let rules = TokenizerConfig::default();
        let sl = StopList::parse("من\nإلى\n", &rules);
        assert_eq!(sl.len(), 2);
        assert!(sl.contains("من") && sl.contains("إلى"));
        assert!(StopList::parse("# comment\n", &rules).is_empty());
        assert!(StopList::parse("\n   \n", &rules).is_empty());
        assert_eq!(StopList::parse("a\na\n", &rules).len(), 1);
    }

    #[test]
    fn stoplist_uses_token_normalization() {
        let rules = TokenizerConfig {
            strip_diacritics: true,
            ..Default::default()
        };
        let sl = StopList::parse("مِنْ\n", &rules);
        assert!(sl.contains("من"));
    }

    #[test]
    fn minimal_pair() {
        let table = extract_bigrams(&toks(&["b", "c"]), &StopList::new());
        assert_eq!(table.count("b", "c"), 1);
        assert_eq!(table.pair_tokens(), 1);
        assert_eq!(table.distinct_pairs(), 1);
    }

    #[test]
    fn stop_word_breaks_adjacency() {
        let sl: StopList = ["s"].into_iter().collect();
        let table = extract_bigrams(&toks(&["a", "s", "b", "c"]), &sl);
        assert_eq!(table.pairs().len(), 1);
        assert_eq!(table.count("b", "c"), 1);
        assert_eq!(table.count("a", "b"), 0);
        assert_eq!(table.unigram("s"), 0);
        assert_eq!(table.unigram("a"), 1);
        assert_eq!(table.corpus_tokens(), 4);
    }

    #[test]
    fn repeated_pairs() {
        let table = extract_bigrams(&toks(&["x", "y", "x", "y"]), &StopList::new());
        assert_eq!(table.count("x", "y"), 2);
        assert_eq!(table.count("y", "x"), 1);
        assert_eq!(table.pair_tokens(), 3);
        let s = table.stats("x", "y");
        assert_eq!((s.c12, s.c1, s.c2, s.n), (2, 2, 2, 3));
    }

    #[test]
    fn all_stop_words_yield_empty_table() {
        let sl: StopList = ["a", "b"].into_iter().collect();
        let table = extract_bigrams(&toks(&["a", "b", "a"]), &sl);
        assert!(table.is_empty());
        assert_eq!(table.pair_tokens(), 0);
    }
}
