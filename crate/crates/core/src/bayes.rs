//! Multinomial Naive Bayes in standard and complement form.
//!
//! Training sums document term weights per label:
//!
//! ```text
//! W[c][t]  = Σ_{d ∈ c} w(t, d)      W_c = Σ_t W[c][t]
//! W_t      = Σ_c W[c][t]            W   = Σ_c W_c
//! ```
//!
//! Scoring a document with term weights `f_t`, smoothing `α` and vocabulary
//! size `|V|`:
//!
//! ```text
//! standard:   ln(n_c / n) + Σ_t f_t · ln((W[c][t] + α) / (W_c + α|V|))
//! complement: −Σ_t f_t · ln((W_t − W[c][t] + α) / ((W − W_c) + α|V|))
//! ```
//!
//! The highest score wins; ties go to the label that sorts first.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{map_combine, par_map, ShardPlan};
use crate::error::{Error, Result};
use crate::eval::ConfusionMatrix;
use crate::io;
use crate::vectorizer::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NbMode {
    Standard,
    Complement,
}

impl std::fmt::Display for NbMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NbMode::Standard => "standard",
            NbMode::Complement => "complement",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    labels: Vec<String>,
    alpha: f64,
    mode: NbMode,
    vocab_size: usize,
    doc_counts: Vec<u64>,
    /// Dense `labels × vocab_size`.
    weights: Vec<Vec<f64>>,
    label_totals: Vec<f64>,
    term_totals: Vec<f64>,
    grand_total: f64,
}

/// On-disk model layout. `w` holds the non-zero sums per label.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    labels: Vec<String>,
    alpha: f64,
    mode: NbMode,
    vocab_size: usize,
    doc_counts: Vec<u64>,
    w: Vec<Vec<(u32, f64)>>,
    w_c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub label: usize,
    pub score: f64,
}

/// Per-shard training sums keyed by (label index, term index).
#[derive(Debug, Default)]
struct Partial {
    sums: HashMap<(u32, u32), f64>,
    doc_counts: Vec<u64>,
}

impl Partial {
    fn merge(mut self, mut other: Partial) -> Partial {
        if self.sums.len() < other.sums.len() {
            std::mem::swap(&mut self, &mut other);
        }
        for (k, v) in other.sums {
            *self.sums.entry(k).or_insert(0.0) += v;
        }
        if self.doc_counts.len() < other.doc_counts.len() {
            self.doc_counts.resize(other.doc_counts.len(), 0);
        }
        for (a, b) in self.doc_counts.iter_mut().zip(other.doc_counts) {
            *a += b;
        }
        self
    }
}

pub fn train_nb(
    vectors: &[SparseVector],
    vocab_size: usize,
    mode: NbMode,
    alpha: f64,
    plan: &ShardPlan,
) -> Result<NbModel> {
    if vectors.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let labels: Vec<String> = vectors
        .iter()
        .map(|v| v.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() < 2 {
        return Err(Error::invalid(format!(
            "training needs at least 2 distinct labels, found {}",
            labels.len()
        )));
    }
    let label_of: HashMap<&str, u32> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u32))
        .collect();

    let partial = map_combine(
        vectors,
        plan,
        Partial::default,
        |v| {
            let c = label_of[v.label.as_str()];
            let mut p = Partial {
                sums: HashMap::with_capacity(v.entries.len()),
                doc_counts: vec![0; c as usize + 1],
            };
            p.doc_counts[c as usize] = 1;
            for &(t, w) in &v.entries {
                if (t as usize) >= vocab_size {
                    return Err(format!("term index {t} outside vocabulary of {vocab_size}"));
                }
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(format!("negative or non-finite weight {w} at term {t}"));
                }
                *p.sums.entry((c, t)).or_insert(0.0) += w;
            }
            Ok(p)
        },
        Partial::merge,
    )?;

    let mut weights = vec![vec![0.0; vocab_size]; labels.len()];
    for ((c, t), w) in partial.sums {
        weights[c as usize][t as usize] = w;
    }
    let mut doc_counts = partial.doc_counts;
    doc_counts.resize(labels.len(), 0);
    let label_totals = weights.iter().map(|row| row.iter().sum()).collect();
    Ok(NbModel::assemble(
        labels,
        alpha,
        mode,
        vocab_size,
        doc_counts,
        weights,
        label_totals,
    ))
}

impl NbModel {
    fn assemble(
        labels: Vec<String>,
        alpha: f64,
        mode: NbMode,
        vocab_size: usize,
        doc_counts: Vec<u64>,
        weights: Vec<Vec<f64>>,
        label_totals: Vec<f64>,
    ) -> Self {
        let mut term_totals = vec![0.0; vocab_size];
        for row in &weights {
            for (acc, w) in term_totals.iter_mut().zip(row) {
                *acc += w;
            }
        }
        let grand_total = label_totals.iter().sum();
        NbModel {
            labels,
            alpha,
            mode,
            vocab_size,
            doc_counts,
            weights,
            label_totals,
            term_totals,
            grand_total,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode(&self) -> NbMode {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn doc_counts(&self) -> &[u64] {
        &self.doc_counts
    }

    pub fn weight(&self, label: usize, term: usize) -> f64 {
        self.weights[label][term]
    }

    pub fn label_total(&self, label: usize) -> f64 {
        self.label_totals[label]
    }

    /// Smoothed `p(t | c)` used by standard scoring.
    pub fn term_probability(&self, label: usize, term: usize) -> f64 {
        (self.weights[label][term] + self.alpha)
            / (self.label_totals[label] + self.alpha * self.vocab_size as f64)
    }

    /// Scores for every label, highest first, ties in label order.
    pub fn classify(&self, entries: &[(u32, f64)]) -> Vec<Scored> {
        let mut scored: Vec<Scored> = (0..self.labels.len())
            .map(|c| Scored {
                label: c,
                score: self.score(c, entries),
            })
            .collect();
        scored.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then(a.label.cmp(&b.label))
        });
        scored
    }

    pub fn predict(&self, entries: &[(u32, f64)]) -> usize {
        self.classify(entries)[0].label
    }

    pub fn score(&self, label: usize, entries: &[(u32, f64)]) -> f64 {
        let alpha_v = self.alpha * self.vocab_size as f64;
        match self.mode {
            NbMode::Standard => {
                let n: u64 = self.doc_counts.iter().sum();
                let prior = (self.doc_counts[label] as f64 / n as f64).ln();
                let denom = self.label_totals[label] + alpha_v;
                let row = &self.weights[label];
                prior
                    + entries
                        .iter()
                        .map(|&(t, f)| f * ((row[t as usize] + self.alpha) / denom).ln())
                        .sum::<f64>()
            }
            NbMode::Complement => {
                let denom = (self.grand_total - self.label_totals[label]) + alpha_v;
                let row = &self.weights[label];
                -entries
                    .iter()
                    .map(|&(t, f)| {
                        let t = t as usize;
                        f * ((self.term_totals[t] - row[t] + self.alpha) / denom).ln()
                    })
                    .sum::<f64>()
            }
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            labels: self.labels.clone(),
            alpha: self.alpha,
            mode: self.mode,
            vocab_size: self.vocab_size,
            doc_counts: self.doc_counts.clone(),
            w: self
                .weights
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, &w)| w != 0.0)
                        .map(|(t, &w)| (t as u32, w))
                        .collect()
                })
                .collect(),
            w_c: self.label_totals.clone(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let l = file.labels.len();
        if l < 2 || file.doc_counts.len() != l || file.w.len() != l || file.w_c.len() != l {
            return Err("labels, doc_counts, w and w_c must have matching lengths (≥ 2)".into());
        }
        if !(file.alpha > 0.0 && file.alpha.is_finite()) {
            return Err(format!("alpha must be positive, got {}", file.alpha));
        }
        let mut weights = vec![vec![0.0; file.vocab_size]; l];
        for (c, row) in file.w.iter().enumerate() {
            for &(t, w) in row {
                let slot = weights[c]
                    .get_mut(t as usize)
                    .ok_or_else(|| format!("term index {t} outside vocabulary"))?;
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(format!("invalid weight {w}"));
                }
                *slot = w;
            }
            let sum: f64 = weights[c].iter().sum();
            let wc = file.w_c[c];
            if (sum - wc).abs() > 1e-6 * wc.abs().max(1.0) {
                return Err(format!("w_c[{c}] = {wc} disagrees with row sum {sum}"));
            }
        }
        Ok(NbModel::assemble(
            file.labels,
            file.alpha,
            file.mode,
            file.vocab_size,
            file.doc_counts,
            weights,
            file.w_c,
        ))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_string(path, &(self.to_json() + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NbModel::from_json(&text).map_err(|m| Error::format(path, 1, m))
    }
}

/// Classifies every test vector. Labels the model never saw get their own
/// true-label rows after the model's labels.
pub fn test_nb(model: &NbModel, vectors: &[SparseVector], plan: &ShardPlan) -> Result<ConfusionMatrix> {
    let mut labels = model.labels.clone();
    let unseen: BTreeSet<&str> = vectors
        .iter()
        .map(|v| v.label.as_str())
        .filter(|l| !model.labels.iter().any(|m| m == l))
        .collect();
    labels.extend(unseen.into_iter().map(str::to_owned));
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let pairs = par_map(vectors, plan, |v| {
        if let Some(&(t, _)) = v.entries.iter().find(|(t, _)| *t as usize >= model.vocab_size) {
            return Err(format!(
                "term index {t} outside vocabulary of {}",
                model.vocab_size
            ));
        }
        Ok((index[v.label.as_str()], model.predict(&v.entries)))
    })?;
    let mut cm = ConfusionMatrix::zeros(labels);
    for (truth, pred) in pairs {
        cm.record(truth, pred);
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str, label: &str, entries: &[(u32, f64)]) -> SparseVector {
        SparseVector {
            name: name.into(),
            label: label.into(),
            entries: entries.to_vec(),
        }
    }

    /// X: "u u v", Y: "v v", raw counts, u = 0, v = 1.
    fn xy() -> Vec<SparseVector> {
        vec![v("/X/1", "X", &[(0, 2.0), (1, 1.0)]), v("/Y/1", "Y", &[(1, 2.0)])]
    }

    #[test]
    fn smoothed_estimates() {
        let m = train_nb(&xy(), 2, NbMode::Standard, 1.0, &ShardPlan::sequential()).unwrap();
        assert_eq!(m.labels(), ["X", "Y"]);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(m.term_probability(0, 0), 0.6));
        assert!(close(m.term_probability(0, 1), 0.4));
        assert!(close(m.term_probability(1, 0), 0.25));
        assert!(close(m.term_probability(1, 1), 0.75));
    }

    #[test]
    fn standard_scores_by_hand() {
        let m = train_nb(&xy(), 2, NbMode::Standard, 1.0, &ShardPlan::sequential()).unwrap();
        let ranked = m.classify(&[(0, 1.0)]);
        assert_eq!(ranked[0].label, 0);
        assert!((ranked[0].score - (0.5f64.ln() + 0.6f64.ln())).abs() < 1e-12);
        assert!((ranked[0].score - -1.204).abs() < 1e-3);
        assert!((ranked[1].score - -2.079).abs() < 1e-3);
    }

    #[test]
    fn empty_vector_ties_go_to_first_label() {
        for mode in [NbMode::Standard, NbMode::Complement] {
            let m = train_nb(&xy(), 2, mode, 1.0, &ShardPlan::sequential()).unwrap();
            let ranked = m.classify(&[]);
            assert_eq!(ranked[0].score, ranked[1].score);
            assert_eq!(m.predict(&[]), 0);
        }
        let m = train_nb(&xy(), 2, NbMode::Complement, 1.0, &ShardPlan::sequential()).unwrap();
        assert!(m.classify(&[]).iter().all(|s| s.score == 0.0));
    }

    #[test]
    fn training_errors() {
        let plan = ShardPlan::sequential();
        assert!(train_nb(&[], 2, NbMode::Standard, 1.0, &plan).is_err());
        assert!(train_nb(&xy()[..1], 2, NbMode::Standard, 1.0, &plan).is_err());
        let neg = vec![v("/X/1", "X", &[(0, -1.0)]), v("/Y/1", "Y", &[(1, 1.0)])];
        match train_nb(&neg, 2, NbMode::Standard, 1.0, &plan).unwrap_err() {
            Error::Shard { key, .. } => assert_eq!(key, "/X/1"),
            other => panic!("unexpected {other}"),
        }
        assert!(train_nb(&xy(), 2, NbMode::Standard, 0.0, &plan).is_err());
        assert!(train_nb(&xy(), 1, NbMode::Standard, 1.0, &plan).is_err());
    }

    #[test]
    fn duplicated_training_set_doubles_sums() {
        let plan = ShardPlan::sequential();
        let once = train_nb(&xy(), 2, NbMode::Standard, 1.0, &plan).unwrap();
        let mut twice_set = xy();
        twice_set.extend(xy().into_iter().map(|mut v| {
            v.name.push('b');
            v
        }));
        let twice = train_nb(&twice_set, 2, NbMode::Standard, 1.0, &plan).unwrap();
        for c in 0..2 {
            for t in 0..2 {
                assert_eq!(twice.weight(c, t), 2.0 * once.weight(c, t));
            }
            assert_eq!(twice.doc_counts()[c], 2 * once.doc_counts()[c]);
        }
        for probe in [&[(0, 1.0)][..], &[(1, 1.0)], &[(0, 1.0), (1, 3.0)]] {
            assert_eq!(once.predict(probe), twice.predict(probe));
        }
    }

    #[test]
    fn complement_scaling_keeps_argmax() {
        let m = train_nb(&xy(), 2, NbMode::Complement, 1.0, &ShardPlan::sequential()).unwrap();
        let doc = [(0, 0.3), (1, 0.7)];
        let scaled: Vec<_> = doc.iter().map(|&(t, f)| (t, f * 5.0)).collect();
        for c in 0..2 {
            assert!((m.score(c, &scaled) - 5.0 * m.score(c, &doc)).abs() < 1e-12);
        }
        assert_eq!(m.predict(&doc), m.predict(&scaled));
    }

    #[test]
    fn modes_agree_on_symmetric_disjoint_problem() {
        let train = vec![
            v("/A/1", "A", &[(0, 1.0), (1, 2.0)]),
            v("/B/1", "B", &[(2, 1.0), (3, 2.0)]),
        ];
        let plan = ShardPlan::sequential();
        let s = train_nb(&train, 4, NbMode::Standard, 1.0, &plan).unwrap();
        let c = train_nb(&train, 4, NbMode::Complement, 1.0, &plan).unwrap();
        for probe in [
            &[(0, 1.0)][..],
            &[(3, 2.0)],
            &[(1, 1.0), (2, 0.5)],
            &[(0, 0.2), (3, 0.9)],
        ] {
            assert_eq!(s.predict(probe), c.predict(probe), "{probe:?}");
        }
    }

    #[test]
    fn test_on_training_set_is_diagonal() {
        let plan = ShardPlan::sequential();
        let m = train_nb(&xy(), 2, NbMode::Standard, 1.0, &plan).unwrap();
        let cm = test_nb(&m, &xy(), &plan).unwrap();
        assert_eq!(cm.counts(), &[vec![1, 0], vec![0, 1]]);
        let empty = test_nb(&m, &[], &plan).unwrap();
        assert_eq!(empty.total(), 0);
    }

    #[test]
    fn unseen_test_labels_get_their_own_row() {
        let plan = ShardPlan::sequential();
        let m = train_nb(&xy(), 2, NbMode::Standard, 1.0, &plan).unwrap();
        let test = vec![v("/Z/1", "Z", &[(0, 1.0)]), v("/X/2", "X", &[(0, 1.0)])];
        let cm = test_nb(&m, &test, &plan).unwrap();
        assert_eq!(cm.labels(), ["X", "Y", "Z"]);
        assert_eq!(cm.counts()[2], vec![1, 0, 0]);
        assert_eq!(cm.total(), 2);
    }

    #[test]
    fn model_json_roundtrip() {
        let m = train_nb(&xy(), 3, NbMode::Complement, 0.5, &ShardPlan::sequential()).unwrap();
        let json = m.to_json();
        assert!(json.starts_with(r#"{"labels":["X","Y"],"alpha":0.5,"mode":"complement","vocab_size":3"#));
        assert_eq!(NbModel::from_json(&json).unwrap(), m);
        let bad = json.replace("\"w_c\":[3.0", "\"w_c\":[4.0");
        assert!(NbModel::from_json(&bad).is_err());
    }

    #[test]
    fn training_is_order_and_worker_independent() {
        let vs: Vec<SparseVector> = (0..200)
            .map(|i| {
                let label = ["a", "b", "c"][i % 3];
                let entries = vec![
                    ((i % 7) as u32, 0.1 + i as f64 / 37.0),
                    (7 + (i % 5) as u32, 1.0 / (i + 1) as f64),
                ];
                v(&format!("/{label}/{i}"), label, &entries)
            })
            .collect();
        let base = train_nb(&vs, 12, NbMode::Standard, 1.0, &ShardPlan::new(1)).unwrap();
        for w in [2, 4, 8] {
            let m = train_nb(&vs, 12, NbMode::Standard, 1.0, &ShardPlan::new(w)).unwrap();
            assert_eq!(m.to_json(), base.to_json());
        }
        let mut rev = vs.clone();
        rev.reverse();
        let r = train_nb(&rev, 12, NbMode::Standard, 1.0, &ShardPlan::new(1)).unwrap();
        for c in 0..3 {
            for t in 0..12 {
                let (a, b) = (r.weight(c, t), base.weight(c, t));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
