//! Synthetic directory-per-class corpora for tests, demos and benchmarks.
//!
//! Each class draws from its own vocabulary: `overlap_fraction` of the terms
//! come from a pool shared by every class, the rest are private to the class.
//! Generated words are three consonant-vowel syllables followed by `k`, so
//! they survive tokenization and light stemming unchanged. Documents mix in
//! stop-words, capitalized sentence starts and plural suffixes to exercise
//! preprocessing.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};
use crate::text_prep::PrepConfig;

/// The five categories of the reference corpus; further classes are numbered.
pub const CLASS_NAMES: [&str; 5] = ["engineering", "law", "life", "medicine", "social"];

const CONSONANTS: [char; 13] = ['b', 'd', 'f', 'g', 'k', 'l', 'm', 'p', 'r', 's', 't', 'v', 'z'];
const VOWELS: [char; 8] = ['a', 'e', 'ı', 'i', 'o', 'ö', 'u', 'ü'];
const FILLERS: [&str; 8] = ["ve", "bir", "ile", "için", "bu", "da", "gibi", "olarak"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub num_classes: usize,
    pub docs_per_class: usize,
    pub vocab_per_class: usize,
    pub overlap_fraction: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.docs_per_class == 0 || self.vocab_per_class == 0 {
            return Err(Error::invalid(
                "class, document and vocabulary counts must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::invalid(format!(
                "overlap fraction {} is outside [0, 1)",
                self.overlap_fraction
            )));
        }
        Ok(())
    }

    pub fn shared_terms(&self) -> usize {
        (self.overlap_fraction * self.vocab_per_class as f64).round() as usize
    }
}

pub fn class_name(i: usize) -> String {
    CLASS_NAMES
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("class{:02}", i + 1))
}

fn syllable(i: usize) -> [char; 2] {
    [
        CONSONANTS[i % CONSONANTS.len()],
        VOWELS[(i / CONSONANTS.len()) % VOWELS.len()],
    ]
}

/// Injective for `i < 104³`.
fn word(i: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut s = String::with_capacity(12);
    let mut rest = i;
    for _ in 0..3 {
        s.extend(syllable(rest % base));
        rest /= base;
    }
    s.push('k');
    s
}

fn is_front(c: char) -> bool {
    matches!(c, 'e' | 'i' | 'ö' | 'ü')
}

fn plural(w: &str) -> String {
    let last_vowel = w.chars().rev().find(|c| VOWELS.contains(c)).unwrap_or('a');
    format!("{w}{}", if is_front(last_vowel) { "ler" } else { "lar" })
}

fn capitalize(w: &str) -> String {
    let mut chars = w.chars();
    match chars.next() {
        Some('i') => format!("İ{}", chars.as_str()),
        Some('ı') => format!("I{}", chars.as_str()),
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Term lists per class: shared pool first, then the class's private terms.
pub fn class_vocabularies(spec: &GenSpec) -> Vec<Vec<String>> {
    let stopwords = PrepConfig::default().stopwords;
    let mut ids = (0..).map(word).filter(|w| !stopwords.contains(w));
    let shared_n = spec.shared_terms();
    let shared: Vec<String> = ids.by_ref().take(shared_n).collect();
    (0..spec.num_classes)
        .map(|_| {
            let mut v = shared.clone();
            v.extend(ids.by_ref().take(spec.vocab_per_class - shared_n));
            v
        })
        .collect()
}

/// Generates the corpus in memory, keyed like an ingested tree.
pub fn generate_records(spec: &GenSpec) -> Result<Vec<DocumentRecord>> {
    spec.validate()?;
    let vocabs = class_vocabularies(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.num_classes * spec.docs_per_class);
    for (c, vocab) in vocabs.iter().enumerate() {
        let label = class_name(c);
        for d in 0..spec.docs_per_class {
            let text = document(&mut rng, vocab);
            records.push(DocumentRecord::new(&label, &doc_name(d), text));
        }
    }
    records.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(records)
}

fn doc_name(d: usize) -> String {
    format!("doc-{:05}.txt", d + 1)
}

fn document(rng: &mut ChaCha8Rng, vocab: &[String]) -> String {
    let len = rng.random_range(40..=80);
    let mut text = String::with_capacity(len * 9);
    let mut sentence_start = true;
    for i in 0..len {
        let mut w = vocab[rng.random_range(0..vocab.len())].clone();
        if rng.random_bool(0.1) {
            w = plural(&w);
        }
        if sentence_start {
            w = capitalize(&w);
            sentence_start = false;
        }
        text.push_str(&w);
        if rng.random_bool(0.15) {
            text.push(' ');
            text.push_str(FILLERS[rng.random_range(0..FILLERS.len())]);
        }
        if i + 1 == len || rng.random_bool(0.1) {
            text.push_str(". ");
            sentence_start = true;
        } else {
            text.push(' ');
        }
    }
    text.truncate(text.trim_end().len());
    text.push('\n');
    text
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSummary {
    pub root: PathBuf,
    pub files: usize,
    pub classes: usize,
}

/// Writes the corpus as a directory-per-class tree under `out`. A non-empty
/// `out` is an error unless `force`, in which case its contents are replaced.
pub fn gen_corpus(spec: &GenSpec, out: &Path, force: bool) -> Result<GenSummary> {
    spec.validate()?;
    if out.exists() {
        let mut entries = std::fs::read_dir(out).map_err(|e| Error::io(out, e))?;
        if entries.next().is_some() {
            if !force {
                return Err(Error::invalid(format!(
                    "{} exists and is not empty (use --force to overwrite)",
                    out.display()
                )));
            }
            std::fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
        }
    }
    let records = generate_records(spec)?;
    for rec in &records {
        let path = out.join(rec.key.trim_start_matches('/'));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, &rec.text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(GenSummary {
        root: out.to_path_buf(),
        files: records.len(),
        classes: spec.num_classes,
    })
}
