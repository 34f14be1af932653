//! Turkish-aware tokenization, stop-word removal and light suffix stemming.
//!
//! The stemmer is a rule table, not a morphological analyzer. It repeatedly
//! removes the longest table suffix whose removal is admissible:
//!
//! * the remaining stem keeps at least `min_stem_len` characters;
//! * the suffix vowel harmonizes with the last vowel of the remaining stem
//!   (two-way for `a/e`, four-way for `ı/i/u/ü`);
//! * a vowel-initial suffix follows a consonant, and a suffix starting with the
//!   buffer consonants `s`/`n` follows a vowel.
//!
//! Stripping stops when nothing is admissible or after `max_suffix_strip`
//! removals.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_tr.txt");
pub const DEFAULT_SUFFIXES: &str = include_str!("../data/suffixes_tr.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stemming {
    Off,
    Light,
}

#[derive(Debug, Clone)]
pub struct PrepConfig {
    pub stopwords: Arc<HashSet<String>>,
    pub min_token_len: usize,
    pub stemming: Stemming,
    pub max_suffix_strip: usize,
    pub min_stem_len: usize,
    /// Longest first.
    pub suffixes: Arc<Vec<String>>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            stopwords: Arc::new(parse_word_list(DEFAULT_STOPWORDS).into_iter().collect()),
            min_token_len: 2,
            stemming: Stemming::Light,
            max_suffix_strip: 4,
            min_stem_len: 4,
            suffixes: Arc::new(parse_suffix_table(DEFAULT_SUFFIXES)),
        }
    }
}

impl PrepConfig {
    pub fn with_stopword_file(mut self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = Arc::new(parse_word_list(&text).into_iter().collect());
        Ok(self)
    }

    pub fn with_suffix_file(mut self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.suffixes = Arc::new(parse_suffix_table(&text));
        Ok(self)
    }
}

/// One entry per non-empty line; `#` starts a comment line.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(turkish_lowercase)
        .collect()
}

/// Parses a suffix table and orders it longest first (stable for ties).
pub fn parse_suffix_table(text: &str) -> Vec<String> {
    let mut suffixes = parse_word_list(text);
    suffixes.sort_by_key(|s| std::cmp::Reverse(s.chars().count()));
    suffixes.dedup();
    suffixes
}

pub fn turkish_lowercase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            'I' => out.push('ı'),
            'İ' => out.push('i'),
            _ => out.extend(c.to_lowercase()),
        }
    }
    out
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Splits on anything that is neither a letter nor an apostrophe. Inside a
/// token, everything from the first apostrophe on is dropped.
pub fn tokenize(text: &str, min_token_len: usize) -> Vec<String> {
    text.split(|c: char| !(c.is_alphabetic() || is_apostrophe(c)))
        .filter_map(|chunk| chunk.split(is_apostrophe).next())
        .map(turkish_lowercase)
        .filter(|word| word.chars().count() >= min_token_len)
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, config: &PrepConfig) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !config.stopwords.contains(t))
        .collect()
}

const VOWELS: &str = "aeıioöuüâîû";

fn is_vowel(c: char) -> bool {
    VOWELS.contains(c)
}

fn harmonizes(stem_vowel: char, suffix_vowel: char) -> bool {
    let stem_vowel = match stem_vowel {
        'â' => 'a',
        'î' => 'i',
        'û' => 'u',
        v => v,
    };
    match suffix_vowel {
        'a' => matches!(stem_vowel, 'a' | 'ı' | 'o' | 'u'),
        'e' => matches!(stem_vowel, 'e' | 'i' | 'ö' | 'ü'),
        'ı' => matches!(stem_vowel, 'a' | 'ı'),
        'i' => matches!(stem_vowel, 'e' | 'i'),
        'u' => matches!(stem_vowel, 'o' | 'u'),
        'ü' => matches!(stem_vowel, 'ö' | 'ü'),
        _ => true,
    }
}

fn admissible(stem: &[char], suffix: &[char], min_stem_len: usize) -> bool {
    if stem.len() < min_stem_len.max(1) {
        return false;
    }
    let last = *stem.last().expect("stem is non-empty");
    let first = suffix[0];
    if is_vowel(first) && is_vowel(last) {
        return false;
    }
    if matches!(first, 's' | 'n') && !is_vowel(last) {
        return false;
    }
    match (
        suffix.iter().copied().find(|&c| is_vowel(c)),
        stem.iter().rev().copied().find(|&c| is_vowel(c)),
    ) {
        (Some(sv), Some(v)) => harmonizes(v, sv),
        (Some(_), None) => false,
        (None, _) => true,
    }
}

/// Strips suffixes from a lowercase token. Deterministic; never shortens the
/// token below `min_stem_len` characters.
pub fn stem_light(token: &str, config: &PrepConfig) -> String {
    let suffixes: Vec<Vec<char>> = config.suffixes.iter().map(|s| s.chars().collect()).collect();
    stem_with(token, &suffixes, config)
}

fn stem_with(token: &str, suffixes: &[Vec<char>], config: &PrepConfig) -> String {
    let mut chars: Vec<char> = token.chars().collect();
    for _ in 0..config.max_suffix_strip {
        let hit = suffixes.iter().find(|suffix| {
            !suffix.is_empty()
                && suffix.len() < chars.len()
                && chars.ends_with(suffix)
                && admissible(&chars[..chars.len() - suffix.len()], suffix, config.min_stem_len)
        });
        match hit {
            Some(suffix) => chars.truncate(chars.len() - suffix.len()),
            None => break,
        }
    }
    chars.into_iter().collect()
}

/// tokenize → remove stop-words → stem (when enabled). Stems that land on a
/// stop-word are removed as well.
pub fn preprocess(text: &str, config: &PrepConfig) -> Vec<String> {
    let tokens = remove_stopwords(tokenize(text, config.min_token_len), config);
    match config.stemming {
        Stemming::Off => tokens,
        Stemming::Light => {
            let suffixes: Vec<Vec<char>> = config.suffixes.iter().map(|s| s.chars().collect()).collect();
            tokens
                .iter()
                .map(|t| stem_with(t, &suffixes, config))
                .filter(|t| !config.stopwords.contains(t))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> PrepConfig {
        PrepConfig::default()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Bilişim Dünyası!", 2), ["bilişim", "dünyası"]);
        assert_eq!(tokenize("ISPARTA", 2), ["ısparta"]);
        assert_eq!(tokenize("İstanbul", 2), ["istanbul"]);
        assert_eq!(tokenize("Türkiye'nin 2023", 2), ["türkiye"]);
        assert_eq!(tokenize("Ankara’da", 2), ["ankara"]);
        assert!(tokenize("", 2).is_empty());
        assert_eq!(tokenize("a bc d", 2), ["bc"]);
        assert_eq!(tokenize("veri3tabanı", 1), ["veri", "tabanı"]);
    }

    #[test]
    fn stopword_examples() {
        let c = cfg();
        let toks = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(remove_stopwords(toks(&["ve", "veri", "ile"]), &c), ["veri"]);
        assert!(remove_stopwords(vec![], &c).is_empty());
        assert_eq!(
            remove_stopwords(toks(&["makale", "veri"]), &c),
            ["makale", "veri"]
        );
    }

    #[test]
    fn shipped_stopword_list_size() {
        let n = cfg().stopwords.len();
        assert!((200..=300).contains(&n), "{n}");
    }

    #[test]
    fn suffix_table_is_longest_first() {
        let c = cfg();
        let lens: Vec<_> = c.suffixes.iter().map(|s| s.chars().count()).collect();
        assert!(lens.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(c.suffixes.len(), 22);
    }

    #[test]
    fn stem_examples() {
        let c = cfg();
        assert_eq!(stem_light("makaleler", &c), "makale");
        assert_eq!(stem_light("veri", &c), "veri");
        assert_eq!(stem_light("veriler", &c), "veri");
        // -den, then nothing in the table ends "evlerin" admissibly.
        assert_eq!(stem_light("evlerinden", &c), "evlerin");
        assert_eq!(stem_light("kitaplarda", &c), "kitap");
        // A light stemmer cannot tell a stem-final vowel from a case ending.
        assert_eq!(stem_light("arabanın", &c), "arab");
        assert_eq!(stem_light("evler", &c), "evler");
    }

    #[test]
    fn strip_cap_is_honoured() {
        let mut c = cfg();
        c.max_suffix_strip = 1;
        assert_eq!(stem_light("kitaplarda", &c), "kitaplar");
        c.max_suffix_strip = 0;
        assert_eq!(stem_light("kitaplarda", &c), "kitaplarda");
    }

    #[test]
    fn preprocess_examples() {
        let c = cfg();
        assert_eq!(preprocess("Veriler ve makaleler", &c), ["veri", "makale"]);
        assert!(preprocess("", &c).is_empty());
        let off = PrepConfig {
            stemming: Stemming::Off,
            ..cfg()
        };
        assert_eq!(preprocess("Veriler ve makaleler", &off), ["veriler", "makaleler"]);
    }

    #[test]
    fn stems_equal_to_stopwords_are_dropped() {
        let c = cfg();
        assert!(!c.stopwords.contains("bunlarda"));
        assert_eq!(stem_light("bunlarda", &c), "bunlar");
        assert!(preprocess("bunlarda", &c).is_empty());
    }

    fn turkish_text() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[a-zA-ZçğıöşüÇĞİÖŞÜ' .,0-9]{0,80}").unwrap()
    }

    proptest! {
        #[test]
        fn preprocess_idempotent_on_terms(text in turkish_text(), stem in any::<bool>()) {
            // The fixpoint only holds when the strip cap does not bind.
            let c = PrepConfig {
                stemming: if stem { Stemming::Light } else { Stemming::Off },
                max_suffix_strip: usize::MAX,
                ..cfg()
            };
            let once = preprocess(&text, &c);
            let mut twice = preprocess(&once.join(" "), &c);
            let mut once_sorted = once.clone();
            once_sorted.sort();
            twice.sort();
            prop_assert_eq!(once_sorted, twice);
        }

        #[test]
        fn output_respects_stopwords_and_length(text in turkish_text()) {
            let c = cfg();
            for term in preprocess(&text, &c) {
                prop_assert!(!c.stopwords.contains(&term));
                prop_assert!(term.chars().count() >= c.min_token_len.min(3));
            }
        }

        #[test]
        fn stem_never_goes_below_floor(word in "[a-zçğıöşü]{1,16}") {
            let c = cfg();
            let s = stem_light(&word, &c);
            prop_assert!(word.starts_with(&s));
            prop_assert!(s == word || s.chars().count() >= 3);
        }
    }
}
