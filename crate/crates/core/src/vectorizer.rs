//! Term dictionary, TF-IDF sparse vectors and seeded train/test splits.
//!
//! Term weight for a term seen `f` times in a document:
//!
//! ```text
//! w = sqrt(f) * (ln(N / (df + 1)) + 1)
//! ```
//!
//! where `N` is the corpus size and `df` the term's document frequency. Terms
//! whose idf factor is not positive are dropped. Vectors are optionally scaled
//! to unit L2 norm.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::engine::{map_combine, ShardPlan};
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<u64>,
    num_docs: u64,
}

impl Dictionary {
    fn from_parts(terms: Vec<String>, df: Vec<u64>, num_docs: u64) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Dictionary {
            terms,
            index,
            df,
            num_docs,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.df[i as usize])
    }

    /// `ln(N / (df + 1)) + 1`
    pub fn idf(&self, index: u32) -> f64 {
        idf(self.num_docs, self.df[index as usize])
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#num_docs={}\n", self.num_docs);
        for (i, (t, df)) in self.terms.iter().zip(&self.df).enumerate() {
            let _ = writeln!(out, "{t}\t{i}\t{df}");
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        io::write_string(path, &self.to_tsv())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let lines = io::read_lines(path)?;
        let header = lines
            .first()
            .ok_or_else(|| Error::format(path, 1, "missing #num_docs header"))?;
        let num_docs = header
            .strip_prefix("#num_docs=")
            .and_then(|n| n.parse::<u64>().ok())
            .ok_or_else(|| Error::format(path, 1, "expected #num_docs=<N>"))?;
        let mut terms = Vec::with_capacity(lines.len() - 1);
        let mut df = Vec::with_capacity(lines.len() - 1);
        for (i, line) in lines.iter().enumerate().skip(1) {
            let bad = |m: &str| Error::format(path, i + 1, m);
            let mut cols = line.split('\t');
            let (Some(term), Some(idx), Some(d), None) = (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(bad("expected term<TAB>index<TAB>df"));
            };
            let idx: usize = idx.parse().map_err(|_| bad("bad index"))?;
            let d: u64 = d.parse().map_err(|_| bad("bad df"))?;
            if idx != terms.len() {
                return Err(bad("indices must be consecutive from 0"));
            }
            if d == 0 || d > num_docs {
                return Err(bad("df outside 1..=num_docs"));
            }
            if terms.last().is_some_and(|prev: &String| prev.as_str() >= term) {
                return Err(bad("terms must be strictly ascending"));
            }
            terms.push(term.to_owned());
            df.push(d);
        }
        Ok(Dictionary::from_parts(terms, df, num_docs))
    }
}

pub fn idf(num_docs: u64, df: u64) -> f64 {
    (num_docs as f64 / (df as f64 + 1.0)).ln() + 1.0
}

/// Weight of a term seen `count` times; `None` when the idf factor is not
/// positive.
pub fn term_weight(count: u32, num_docs: u64, df: u64) -> Option<f64> {
    let idf = idf(num_docs, df);
    (idf > 0.0).then(|| f64::from(count).sqrt() * idf)
}

/// Builds the dictionary from already preprocessed documents. Terms with
/// `df < min_df` are left out; `N` counts every document, empty ones too.
pub fn build_dictionary<D>(docs: &[D], min_df: u64, plan: &ShardPlan) -> Result<Dictionary>
where
    D: AsRef<[String]> + crate::engine::Keyed + Sync,
{
    if docs.is_empty() {
        return Err(Error::invalid("cannot build a dictionary from zero documents"));
    }
    let counts = map_combine(
        docs,
        plan,
        HashMap::<&str, u64>::new,
        |doc| {
            let mut seen = HashMap::new();
            for t in doc.as_ref() {
                seen.insert(t.as_str(), 1u64);
            }
            Ok::<_, std::convert::Infallible>(seen)
        },
        |mut a, mut b| {
            if a.len() < b.len() {
                std::mem::swap(&mut a, &mut b);
            }
            for (t, n) in b {
                *a.entry(t).or_default() += n;
            }
            a
        },
    )?;
    if counts.is_empty() {
        return Err(Error::invalid("corpus contains no terms"));
    }
    let sorted: BTreeMap<&str, u64> = counts.into_iter().filter(|&(_, n)| n >= min_df).collect();
    let (terms, df) = sorted.into_iter().map(|(t, n)| (t.to_owned(), n)).unzip();
    Ok(Dictionary::from_parts(terms, df, docs.len() as u64))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SparseVector {
    pub name: String,
    pub label: String,
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.entries.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(format!("{}: indices not strictly increasing", self.name));
        }
        if let Some(&(i, w)) = self.entries.iter().find(|(_, w)| !w.is_finite() || *w == 0.0) {
            return Err(format!("{}: bad weight {w} at index {i}", self.name));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// One JSON line; weights in scientific notation with 17 significant
    /// digits.
    pub fn to_json_line(&self) -> String {
        let mut line = String::with_capacity(32 + self.entries.len() * 28);
        line.push_str("{\"name\":");
        line.push_str(&serde_json::to_string(&self.name).expect("string"));
        line.push_str(",\"label\":");
        line.push_str(&serde_json::to_string(&self.label).expect("string"));
        line.push_str(",\"entries\":[");
        for (k, (i, w)) in self.entries.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "[{i},{w:.16e}]");
        }
        line.push_str("]}");
        line
    }
}

pub fn write_vectors(path: &Path, vectors: &[SparseVector]) -> Result<()> {
    let mut w = io::create(path)?;
    for v in vectors {
        io::write_line(path, &mut w, &v.to_json_line())?;
    }
    io::finish(path, w)
}

pub fn read_vectors(path: &Path) -> Result<Vec<SparseVector>> {
    let lines = io::read_lines(path)?;
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let v: SparseVector =
                serde_json::from_str(line).map_err(|e| Error::format(path, i + 1, e.to_string()))?;
            v.validate().map_err(|m| Error::format(path, i + 1, m))?;
            Ok(v)
        })
        .collect()
}

/// TF-IDF entries for one preprocessed document. Out-of-dictionary terms are
/// skipped.
pub fn weigh_terms(terms: &[String], dict: &Dictionary, normalize: bool) -> Vec<(u32, f64)> {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for t in terms {
        if let Some(i) = dict.index_of(t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .filter_map(|(i, f)| term_weight(f, dict.num_docs, dict.df[i as usize]).map(|w| (i, w)))
        .collect();
    if normalize {
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
    }
    entries
}

pub fn vectorize(
    name: &str,
    label: &str,
    terms: &[String],
    dict: &Dictionary,
    normalize: bool,
) -> SparseVector {
    SparseVector {
        name: name.to_owned(),
        label: label.to_owned(),
        entries: weigh_terms(terms, dict, normalize),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Bernoulli,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    test_pct: u8,
    pub seed: u64,
    pub mode: SplitMode,
}

impl SplitSpec {
    pub fn new(test_pct: u8, seed: u64, mode: SplitMode) -> Result<Self> {
        if test_pct > 100 {
            return Err(Error::invalid(format!(
                "test percentage {test_pct} is outside 0..=100"
            )));
        }
        Ok(SplitSpec { test_pct, seed, mode })
    }

    pub fn test_pct(&self) -> u8 {
        self.test_pct
    }
}

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..bound` (`bound > 0`), multiply-shift reduction.
    pub fn below(&mut self, bound: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Whether a vector with this name goes to the test side in bernoulli mode.
pub fn bernoulli_is_test(name: &str, spec: &SplitSpec) -> bool {
    let mut rng = SplitMix64::new(spec.seed ^ fnv1a64(name.as_bytes()));
    rng.next_f64() < f64::from(spec.test_pct) / 100.0
}

/// Test-set size in exact mode: `round(n * pct / 100)`, halves rounded up.
pub fn exact_test_size(n: usize, test_pct: u8) -> usize {
    (n * usize::from(test_pct) + 50) / 100
}

/// Splits into (train, test), each keeping input order.
pub fn split_vectors(vectors: Vec<SparseVector>, spec: &SplitSpec) -> (Vec<SparseVector>, Vec<SparseVector>) {
    let in_test: Vec<bool> = match spec.mode {
        SplitMode::Bernoulli => vectors.iter().map(|v| bernoulli_is_test(&v.name, spec)).collect(),
        SplitMode::Exact => {
            let mut order: Vec<usize> = (0..vectors.len()).collect();
            order.sort_by(|&a, &b| vectors[a].name.cmp(&vectors[b].name));
            let mut rng = SplitMix64::new(spec.seed);
            for i in (1..order.len()).rev() {
                let j = rng.below(i as u64 + 1) as usize;
                order.swap(i, j);
            }
            let mut flags = vec![false; vectors.len()];
            for &i in &order[..exact_test_size(vectors.len(), spec.test_pct)] {
                flags[i] = true;
            }
            flags
        }
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (v, t) in vectors.into_iter().zip(in_test) {
        if t {
            test.push(v);
        } else {
            train.push(v);
        }
    }
    (train, test)
}
