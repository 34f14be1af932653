//! Stage functions shared by the command-line front end and the tests, plus
//! the one-shot pipeline: ingest → vectorize → split → train → test → report.

use std::borrow::Cow;
use std::path::{Path, PathBuf};

use log::info;

use crate::bayes::{self, NbMode, NbModel};
use crate::corpus::{self, DocumentRecord};
use crate::engine::{par_map, Keyed, ShardPlan};
use crate::error::{Error, Result};
use crate::eval::{self, ConfusionMatrix};
use crate::text_prep::{self, PrepConfig, Stemming};
use crate::vectorizer::{self, Dictionary, SparseVector, SplitMode, SplitSpec};

/// A document after preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDoc {
    pub key: String,
    pub label: String,
    pub terms: Vec<String>,
}

impl AsRef<[String]> for TermDoc {
    fn as_ref(&self) -> &[String] {
        &self.terms
    }
}

impl Keyed for TermDoc {
    fn key(&self) -> std::borrow::Cow<'_, str> {
        std::borrow::Cow::Borrowed(&self.key)
    }
}

#[derive(Debug, Clone)]
pub struct VectorizeConfig {
    pub prep: PrepConfig,
    /// Where the stop-word list came from, for the report header.
    pub stopword_source: String,
    pub min_df: u64,
    pub normalize: bool,
}

impl Default for VectorizeConfig {
    fn default() -> Self {
        VectorizeConfig {
            prep: PrepConfig::default(),
            stopword_source: "builtin".into(),
            min_df: 1,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub vectorize: VectorizeConfig,
    pub split: SplitSpec,
    pub mode: NbMode,
    pub alpha: f64,
    pub plan: ShardPlan,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vectorize: VectorizeConfig::default(),
            split: SplitSpec::new(40, 0, SplitMode::Bernoulli).expect("40 is a valid percentage"),
            mode: NbMode::Standard,
            alpha: 1.0,
            plan: ShardPlan::sequential(),
        }
    }
}

impl PipelineConfig {
    /// Settings that determine the outputs. The worker count is left out: it
    /// never changes a result.
    pub fn describe(&self) -> Vec<String> {
        let v = &self.vectorize;
        vec![
            format!(
                "prep: stopwords={} min_token_len={} stemming={} max_suffix_strip={} min_stem_len={}",
                v.stopword_source,
                v.prep.min_token_len,
                match v.prep.stemming {
                    Stemming::Off => "off",
                    Stemming::Light => "light",
                },
                v.prep.max_suffix_strip,
                v.prep.min_stem_len,
            ),
            format!(
                "vectorize: weighting=sqrt-tf*smoothed-idf normalize={} min_df={}",
                v.normalize, v.min_df
            ),
            format!(
                "split: test_pct={} seed={} mode={}",
                self.split.test_pct(),
                self.split.seed,
                match self.split.mode {
                    SplitMode::Bernoulli => "bernoulli",
                    SplitMode::Exact => "exact",
                }
            ),
            format!("model: mode={} alpha={}", self.mode, self.alpha),
        ]
    }
}

pub fn preprocess_corpus(
    records: &[DocumentRecord],
    prep: &PrepConfig,
    plan: &ShardPlan,
) -> Result<Vec<TermDoc>> {
    par_map(records, plan, |r| {
        Ok::<_, std::convert::Infallible>(TermDoc {
            key: r.key.clone(),
            label: r.label.clone(),
            terms: text_prep::preprocess(&r.text, prep),
        })
    })
}

/// Dictionary plus one vector per record, in ascending key order whatever
/// the input order. Duplicate keys are rejected.
pub fn vectorize_corpus(
    records: &[DocumentRecord],
    config: &VectorizeConfig,
    plan: &ShardPlan,
) -> Result<(Dictionary, Vec<SparseVector>)> {
    let records = canonical_order(records)?;
    let docs = preprocess_corpus(&records, &config.prep, plan)?;
    let dict = vectorizer::build_dictionary(&docs, config.min_df, plan)?;
    let vectors = par_map(&docs, plan, |d| {
        Ok::<_, std::convert::Infallible>(vectorizer::vectorize(
            &d.key,
            &d.label,
            &d.terms,
            &dict,
            config.normalize,
        ))
    })?;
    Ok((dict, vectors))
}

fn canonical_order(records: &[DocumentRecord]) -> Result<Cow<'_, [DocumentRecord]>> {
    if records.windows(2).all(|w| w[0].key < w[1].key) {
        return Ok(Cow::Borrowed(records));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    if let Some(w) = sorted.windows(2).find(|w| w[0].key == w[1].key) {
        return Err(Error::invalid(format!("duplicate document key {}", w[0].key)));
    }
    Ok(Cow::Owned(sorted))
}

/// Reads a corpus given either as a record file or as a class-directory tree.
pub fn load_corpus(input: &Path, fail_fast: bool) -> Result<Vec<DocumentRecord>> {
    if input.is_dir() {
        Ok(corpus::collect_directory(input, fail_fast)?.records)
    } else {
        corpus::read_corpus(input)
    }
}

/// Every artifact the pipeline writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelinePaths {
    pub corpus: PathBuf,
    pub dictionary: PathBuf,
    pub vectors: PathBuf,
    pub train: PathBuf,
    pub test: PathBuf,
    pub model: PathBuf,
    pub matrix: PathBuf,
    pub report: PathBuf,
}

impl PipelinePaths {
    pub fn in_dir(work_dir: &Path, report: &Path) -> Self {
        PipelinePaths {
            corpus: work_dir.join("corpus.jsonl"),
            dictionary: work_dir.join("dict.tsv"),
            vectors: work_dir.join("vectors.jsonl"),
            train: work_dir.join("train.jsonl"),
            test: work_dir.join("test.jsonl"),
            model: work_dir.join("model.json"),
            matrix: work_dir.join("matrix.json"),
            report: report.to_path_buf(),
        }
    }

    pub fn all(&self) -> [&Path; 8] {
        [
            &self.corpus,
            &self.dictionary,
            &self.vectors,
            &self.train,
            &self.test,
            &self.model,
            &self.matrix,
            &self.report,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub dictionary_size: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub matrix: ConfusionMatrix,
    pub report: String,
}

/// Runs every stage in order and writes each artifact.
pub fn run_pipeline(input: &Path, paths: &PipelinePaths, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let plan = &config.plan;
    let records = load_corpus(input, false)?;
    let corpus_file = corpus::write_corpus(&paths.corpus, &records)?;
    info!("seqdir: {} records", corpus_file.record_count);

    let (dict, vectors) = vectorize_corpus(&records, &config.vectorize, plan)?;
    dict.write_tsv(&paths.dictionary)?;
    vectorizer::write_vectors(&paths.vectors, &vectors)?;
    info!("vectorize: {} terms, {} vectors", dict.len(), vectors.len());

    let (train, test) = vectorizer::split_vectors(vectors, &config.split);
    vectorizer::write_vectors(&paths.train, &train)?;
    vectorizer::write_vectors(&paths.test, &test)?;
    info!("split: {} train, {} test", train.len(), test.len());

    let model = bayes::train_nb(&train, dict.len(), config.mode, config.alpha, plan)?;
    model.write(&paths.model)?;
    info!("trainnb: {} labels, mode {}", model.labels().len(), model.mode());

    let (matrix, report) = test_and_report(&model, &test, &config.describe(), plan)?;
    matrix.write(&paths.matrix)?;
    crate::io::write_string(&paths.report, &report)?;
    info!("testnb: {} classified", matrix.total());

    Ok(PipelineOutcome {
        dictionary_size: dict.len(),
        train_size: train.len(),
        test_size: test.len(),
        matrix,
        report,
    })
}

pub fn test_and_report(
    model: &NbModel,
    test: &[SparseVector],
    header: &[String],
    plan: &ShardPlan,
) -> Result<(ConfusionMatrix, String)> {
    let matrix = bayes::test_nb(model, test, plan)?;
    let report = eval::render_report(&matrix, header, None)?;
    Ok((matrix, report))
}
