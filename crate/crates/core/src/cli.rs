//! Command-line front end. Subcommands follow the stage order
//! `seqdir → vectorize → split → trainnb → testnb`, with `pipeline` chaining
//! all of them.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::bayes::{self, NbMode, NbModel};
use crate::corpus;
use crate::engine::{self, ShardPlan, SweepSettings};
use crate::eval::{self, ConfusionMatrix};
use crate::pipeline::{self, PipelineConfig, PipelinePaths, VectorizeConfig};
use crate::synth::{self, GenSpec};
use crate::text_prep::{PrepConfig, Stemming};
use crate::vectorizer::{self, Dictionary, SplitMode, SplitSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "docclass",
    version,
    propagate_version = true,
    about = "Naive Bayes document classification pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ExecArgs {
    /// Worker threads
    #[arg(long, default_value_t = 1, value_parser = positive)]
    workers: usize,
}

impl ExecArgs {
    fn plan(&self) -> ShardPlan {
        ShardPlan::new(self.workers)
    }
}

#[derive(Debug, Args)]
struct PrepArgs {
    /// Stop-word list, one lowercase term per line
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Suffix table for the light stemmer, one suffix per line
    #[arg(long, value_name = "FILE")]
    suffixes: Option<PathBuf>,
    /// Disable suffix stripping
    #[arg(long)]
    no_stem: bool,
    #[arg(long, default_value_t = 2, value_parser = positive)]
    min_token_len: usize,
}

#[derive(Debug, Args)]
struct VecArgs {
    /// Keep raw TF-IDF weights instead of unit-length vectors
    #[arg(long)]
    no_norm: bool,
    /// Drop terms found in fewer documents
    #[arg(long, default_value_t = 1)]
    min_df: u64,
}

impl VecArgs {
    fn config(&self, prep: &PrepArgs) -> anyhow::Result<VectorizeConfig> {
        let mut cfg = PrepConfig {
            min_token_len: prep.min_token_len,
            stemming: if prep.no_stem {
                Stemming::Off
            } else {
                Stemming::Light
            },
            ..PrepConfig::default()
        };
        if let Some(p) = &prep.stopwords {
            cfg = cfg.with_stopword_file(p)?;
        }
        if let Some(p) = &prep.suffixes {
            cfg = cfg.with_suffix_file(p)?;
        }
        Ok(VectorizeConfig {
            prep: cfg,
            stopword_source: prep
                .stopwords
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "builtin".into()),
            min_df: self.min_df,
            normalize: !self.no_norm,
        })
    }
}

#[derive(Debug, Args)]
struct NbArgs {
    /// Complement Naive Bayes
    #[arg(long)]
    complement: bool,
    /// Additive smoothing
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    alpha: f64,
}

impl NbArgs {
    fn mode(&self) -> NbMode {
        if self.complement {
            NbMode::Complement
        } else {
            NbMode::Standard
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchStage {
    Vectorize,
    Trainnb,
    Testnb,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest a directory-per-class tree into a record file
    Seqdir {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Abort on the first unreadable file instead of skipping it
        #[arg(long)]
        fail_fast: bool,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Preprocess records and write the dictionary and TF-IDF vectors
    Vectorize {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        vec: VecArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Split vectors into training and test sets
    #[command(args_override_self = true)]
    Split {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=100))]
        random_selection_pct: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Exactly round(n·pct/100) test vectors instead of independent draws
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Train a Naive Bayes model
    Trainnb {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Dictionary giving the vocabulary size (default: largest index + 1)
        #[arg(long)]
        dict: Option<PathBuf>,
        #[command(flatten)]
        nb: NbArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Classify test vectors and write the report
    Testnb {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        model: PathBuf,
        /// Report file (default: stdout)
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        /// Append wall-clock time to the report
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Render a report from a confusion-matrix file
    Report {
        #[arg(short, long)]
        matrix: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every stage end to end
    #[command(args_override_self = true)]
    Pipeline {
        /// Class-directory tree or record file
        #[arg(short, long)]
        input: PathBuf,
        /// Report file
        #[arg(short, long)]
        output: PathBuf,
        /// Directory for intermediate artifacts (default: <report dir>/pipeline-work)
        #[arg(long)]
        work_dir: Option<PathBuf>,
        /// key=value defaults; flags on the command line win
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u8).range(0..=100))]
        test_pct: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        nb: NbArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        vec: VecArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Accuracy for several test-set percentages
    #[command(args_override_self = true)]
    Sweep {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40",
              value_parser = clap::value_parser!(u8).range(0..=100))]
        pcts: Vec<u8>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exact: bool,
        /// Also write the table as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[command(flatten)]
        nb: NbArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        vec: VecArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Wall-clock timing of one stage for several worker counts
    #[command(args_override_self = true)]
    Bench {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8", value_parser = positive)]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 3, value_parser = positive)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = BenchStage::Testnb)]
        stage: BenchStage,
        #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u8).range(0..=100))]
        test_pct: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[command(flatten)]
        nb: NbArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        vec: VecArgs,
    },
    /// Write a synthetic directory-per-class corpus
    GenCorpus {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5, value_parser = positive)]
        classes: usize,
        #[arg(long, default_value_t = 200, value_parser = positive)]
        docs_per_class: usize,
        #[arg(long, default_value_t = 100, value_parser = positive)]
        vocab_per_class: usize,
        #[arg(long, default_value_t = 0.2, value_parser = overlap)]
        overlap: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Replace a non-empty output directory
        #[arg(long)]
        force: bool,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected an integer ≥ 1, got {s:?}")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn overlap(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if (0.0..1.0).contains(&x) => Ok(x),
        _ => Err(format!("expected a fraction in [0, 1), got {s:?}")),
    }
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Parses `key=value` lines into flag tokens: `true` becomes a bare flag,
/// `false` is dropped.
pub fn config_file_args(text: &str) -> Result<Vec<String>, String> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("line {}: invalid key", i + 1));
        }
        match value {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            _ => {
                args.push(format!("--{key}"));
                args.push(value.to_owned());
            }
        }
    }
    Ok(args)
}

/// Splices the contents of `--config FILE` right after the subcommand name
/// so explicit flags, which come later, take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    if args.len() < 2 {
        return Ok(args);
    }
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config file {}", path.display()))
        .map_err(Failure::Data)?;
    let extra = config_file_args(&text).map_err(|m| Failure::Usage(format!("{}: {m}", path.display())))?;
    let mut out = args[..2].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// Runs one invocation (`args[0]` is the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let outcome = expand_config(args).and_then(|args| match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli.command),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    Ok(())
                }
                _ => Err(Failure::Usage(e.render().to_string())),
            }
        }
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", msg.trim_end());
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {}", error_chain(&e));
            EXIT_DATA
        }
    }
}

/// Joins the cause chain, skipping causes already quoted by their parent.
fn error_chain(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}

fn split_mode(exact: bool) -> SplitMode {
    if exact {
        SplitMode::Exact
    } else {
        SplitMode::Bernoulli
    }
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn vocab_size(dict: Option<&Path>, vectors: &[vectorizer::SparseVector]) -> anyhow::Result<usize> {
    Ok(match dict {
        Some(p) => Dictionary::read_tsv(p)?.len(),
        None => vectors
            .iter()
            .filter_map(|v| v.entries.last().map(|&(i, _)| i as usize + 1))
            .max()
            .unwrap_or(0),
    })
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Seqdir {
            input,
            output,
            fail_fast,
            exec: _,
        } => {
            let (corpus, skipped) = corpus::ingest_directory(&input, &output, fail_fast)?;
            info!(
                "wrote {} records to {} ({} skipped)",
                corpus.record_count,
                output.display(),
                skipped.len()
            );
        }
        Command::Vectorize {
            input,
            output,
            dict,
            prep,
            vec,
            exec,
        } => {
            let cfg = vec.config(&prep)?;
            let records = corpus::read_corpus(&input)?;
            let (dictionary, vectors) = pipeline::vectorize_corpus(&records, &cfg, &exec.plan())?;
            dictionary.write_tsv(&dict)?;
            vectorizer::write_vectors(&output, &vectors)?;
            info!("{} terms, {} vectors", dictionary.len(), vectors.len());
        }
        Command::Split {
            input,
            random_selection_pct,
            seed,
            exact,
            train_out,
            test_out,
            exec: _,
        } => {
            let spec = SplitSpec::new(random_selection_pct, seed, split_mode(exact))?;
            let vectors = vectorizer::read_vectors(&input)?;
            if vectors.is_empty() {
                return Err(Failure::Data(anyhow::anyhow!(
                    "{}: no vectors to split",
                    input.display()
                )));
            }
            let (train, test) = vectorizer::split_vectors(vectors, &spec);
            vectorizer::write_vectors(&train_out, &train)?;
            vectorizer::write_vectors(&test_out, &test)?;
            info!("{} train, {} test", train.len(), test.len());
        }
        Command::Trainnb {
            input,
            output,
            dict,
            nb,
            exec,
        } => {
            let train = vectorizer::read_vectors(&input)?;
            let vocab = vocab_size(dict.as_deref(), &train)?;
            let model = bayes::train_nb(&train, vocab, nb.mode(), nb.alpha, &exec.plan())?;
            model.write(&output)?;
            info!("trained {} labels over {} terms", model.labels().len(), vocab);
        }
        Command::Testnb {
            input,
            model,
            output,
            matrix_out,
            timings,
            exec,
        } => {
            let start = Instant::now();
            let model = NbModel::read(&model)?;
            let test = vectorizer::read_vectors(&input)?;
            let matrix = bayes::test_nb(&model, &test, &exec.plan())?;
            let header = [format!("model: mode={} alpha={}", model.mode(), model.alpha())];
            let elapsed = timings.then(|| start.elapsed());
            let report = eval::render_report(&matrix, &header, elapsed)?;
            if let Some(p) = &matrix_out {
                matrix.write(p)?;
            }
            emit(output.as_deref(), &report)?;
        }
        Command::Report { matrix, output } => {
            let matrix = ConfusionMatrix::read(&matrix)?;
            emit(output.as_deref(), &eval::render_report(&matrix, &[], None)?)?;
        }
        Command::Pipeline {
            input,
            output,
            work_dir,
            config: _,
            test_pct,
            seed,
            exact,
            nb,
            prep,
            vec,
            exec,
        } => {
            let config = PipelineConfig {
                vectorize: vec.config(&prep)?,
                split: SplitSpec::new(test_pct, seed, split_mode(exact))?,
                mode: nb.mode(),
                alpha: nb.alpha,
                plan: exec.plan(),
            };
            let work_dir = work_dir.unwrap_or_else(|| {
                output
                    .parent()
                    .unwrap_or_else(|| Path::new("."))
                    .join("pipeline-work")
            });
            let paths = PipelinePaths::in_dir(&work_dir, &output);
            let start = Instant::now();
            let outcome = pipeline::run_pipeline(&input, &paths, &config)?;
            info!(
                "accuracy {:.4}% over {} test documents in {} ms",
                eval::accuracy(&outcome.matrix)?.fraction * 100.0,
                outcome.test_size,
                start.elapsed().as_millis()
            );
        }
        Command::Sweep {
            input,
            pcts,
            seed,
            exact,
            csv,
            config: _,
            nb,
            prep,
            vec,
            exec,
        } => {
            let cfg = vec.config(&prep)?;
            let records = pipeline::load_corpus(&input, false)?;
            let plan = exec.plan();
            let (dict, vectors) = pipeline::vectorize_corpus(&records, &cfg, &plan)?;
            let settings = SweepSettings {
                seed,
                split_mode: split_mode(exact),
                nb_mode: nb.mode(),
                alpha: nb.alpha,
            };
            let table = engine::sweep_test_pct(&vectors, dict.len(), &pcts, settings, &plan);
            print!("{table}");
            if let Some(p) = csv {
                std::fs::write(&p, table.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Bench {
            input,
            workers,
            reps,
            stage,
            test_pct,
            seed,
            csv,
            config: _,
            nb,
            prep,
            vec,
        } => {
            let cfg = vec.config(&prep)?;
            let records = pipeline::load_corpus(&input, false)?;
            let seq = ShardPlan::sequential();
            let (dict, vectors) = pipeline::vectorize_corpus(&records, &cfg, &seq)?;
            let spec = SplitSpec::new(test_pct, seed, SplitMode::Bernoulli)?;
            let (train, test) = vectorizer::split_vectors(vectors, &spec);
            if train.is_empty() || test.is_empty() {
                return Err(Failure::Data(anyhow::anyhow!(
                    "test percentage {test_pct} leaves an empty side"
                )));
            }
            let model = bayes::train_nb(&train, dict.len(), nb.mode(), nb.alpha, &seq)?;
            let table = match stage {
                BenchStage::Vectorize => engine::benchmark("vectorize", &workers, reps, |w| {
                    pipeline::vectorize_corpus(&records, &cfg, &ShardPlan::new(w)).map(drop)
                })?,
                BenchStage::Trainnb => engine::benchmark("trainnb", &workers, reps, |w| {
                    bayes::train_nb(&train, dict.len(), nb.mode(), nb.alpha, &ShardPlan::new(w)).map(drop)
                })?,
                BenchStage::Testnb => engine::benchmark("testnb", &workers, reps, |w| {
                    bayes::test_nb(&model, &test, &ShardPlan::new(w)).map(drop)
                })?,
            };
            print!("{table}");
            if let Some(p) = csv {
                std::fs::write(&p, table.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::GenCorpus {
            output,
            classes,
            docs_per_class,
            vocab_per_class,
            overlap,
            seed,
            force,
        } => {
            let spec = GenSpec {
                num_classes: classes,
                docs_per_class,
                vocab_per_class,
                overlap_fraction: overlap,
                seed,
            };
            let summary = synth::gen_corpus(&spec, &output, force)?;
            info!(
                "wrote {} documents in {} classes to {}",
                summary.files,
                summary.classes,
                summary.root.display()
            );
        }
    }
    Ok(())
}
