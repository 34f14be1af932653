//! Local data-parallel execution.
//!
//! Input records are cut into contiguous shards. `W` worker threads pull
//! shards from a shared counter, fold each shard with the caller's map and
//! combine functions, and the per-shard results are merged on the calling
//! thread in shard order. The shard layout depends only on the input length
//! and the shard count, never on `W`, so floating-point reductions give the
//! same bits for every worker count.

use std::borrow::Cow;
use std::fmt::{self, Display, Write as _};
use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use crate::bayes::{self, NbMode};
use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};
use crate::eval;
use crate::vectorizer::{self, SparseVector, SplitMode, SplitSpec};

/// Records that can name themselves in error messages.
pub trait Keyed {
    fn key(&self) -> Cow<'_, str>;
}

impl Keyed for DocumentRecord {
    fn key(&self) -> Cow<'_, str> {
        Cow::Borrowed(&self.key)
    }
}

impl Keyed for SparseVector {
    fn key(&self) -> Cow<'_, str> {
        Cow::Borrowed(&self.name)
    }
}

impl Keyed for String {
    fn key(&self) -> Cow<'_, str> {
        Cow::Borrowed(self)
    }
}

impl<K: Keyed, V> Keyed for (K, V) {
    fn key(&self) -> Cow<'_, str> {
        self.0.key()
    }
}

macro_rules! keyed_via_display {
    ($($t:ty),*) => {$(
        impl Keyed for $t {
            fn key(&self) -> Cow<'_, str> {
                Cow::Owned(self.to_string())
            }
        }
    )*};
}
keyed_via_display!(u32, u64, usize, i32, i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardPlan {
    num_shards: usize,
    workers: usize,
}

impl ShardPlan {
    pub const DEFAULT_SHARDS: usize = 64;

    pub fn new(workers: usize) -> Self {
        ShardPlan {
            num_shards: Self::DEFAULT_SHARDS,
            workers: workers.max(1),
        }
    }

    pub fn with_shards(num_shards: usize, workers: usize) -> Result<Self> {
        if num_shards == 0 || workers == 0 {
            return Err(Error::invalid("shard and worker counts must be at least 1"));
        }
        Ok(ShardPlan { num_shards, workers })
    }

    pub fn sequential() -> Self {
        ShardPlan::new(1)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn num_shards(&self) -> usize {
        self.num_shards
    }

    /// Contiguous, non-empty ranges covering `0..len`.
    pub fn ranges(&self, len: usize) -> Vec<Range<usize>> {
        let k = self.num_shards.min(len);
        (0..k).map(|i| (i * len / k)..((i + 1) * len / k)).collect()
    }
}

impl Default for ShardPlan {
    fn default() -> Self {
        ShardPlan::sequential()
    }
}

fn run_shards<S, F>(len: usize, plan: &ShardPlan, work: F) -> Result<Vec<S>>
where
    S: Send,
    F: Fn(usize, Range<usize>) -> Result<S> + Sync,
{
    let ranges = plan.ranges(len);
    let workers = plan.workers.min(ranges.len());
    if workers <= 1 {
        return ranges.into_iter().enumerate().map(|(i, r)| work(i, r)).collect();
    }

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let per_worker: Vec<Vec<(usize, Result<S>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    while !failed.load(Ordering::Relaxed) {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(range) = ranges.get(i) else { break };
                        let out = work(i, range.clone());
                        if out.is_err() {
                            failed.store(true, Ordering::Relaxed);
                        }
                        done.push((i, out));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    });

    let mut slots: Vec<Option<Result<S>>> = (0..ranges.len()).map(|_| None).collect();
    for (i, out) in per_worker.into_iter().flatten() {
        slots[i] = Some(out);
    }
    let mut results = Vec::with_capacity(slots.len());
    let mut first_err = None;
    for slot in slots {
        match slot {
            Some(Ok(s)) => results.push(s),
            Some(Err(e)) => {
                first_err = Some(e);
                break;
            }
            // Skipped after another shard failed.
            None => {}
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(results),
    }
}

fn shard_error<R: Keyed, E: Display>(shard: usize, record: &R, err: E) -> Error {
    Error::Shard {
        shard,
        key: record.key().into_owned(),
        message: err.to_string(),
    }
}

/// Maps every record and folds the outputs with `combine`, starting from
/// `init()` in each shard and again across shards.
///
/// `combine` must be associative and commutative with `init()` as identity;
/// under that contract the result equals the sequential left fold in input
/// order. Each shard is folded in record order and shard results are merged in
/// shard order, so the grouping is fixed by the plan's shard count alone.
pub fn map_combine<'a, R, T, E, I, M, C>(
    records: &'a [R],
    plan: &ShardPlan,
    init: I,
    map_fn: M,
    combine_fn: C,
) -> Result<T>
where
    R: Keyed + Sync,
    T: Send,
    E: Display,
    I: Fn() -> T + Sync,
    M: Fn(&'a R) -> std::result::Result<T, E> + Sync,
    C: Fn(T, T) -> T + Sync,
{
    let partials = run_shards(records.len(), plan, |shard, range| {
        let mut acc = init();
        for record in &records[range] {
            let mapped = map_fn(record).map_err(|e| shard_error(shard, record, e))?;
            acc = combine_fn(acc, mapped);
        }
        Ok(acc)
    })?;
    Ok(partials.into_iter().fold(init(), &combine_fn))
}

/// Order-preserving parallel map.
pub fn par_map<R, U, E, F>(records: &[R], plan: &ShardPlan, map_fn: F) -> Result<Vec<U>>
where
    R: Keyed + Sync,
    U: Send,
    E: Display,
    F: Fn(&R) -> std::result::Result<U, E> + Sync,
{
    let chunks = run_shards(records.len(), plan, |shard, range| {
        records[range]
            .iter()
            .map(|r| map_fn(r).map_err(|e| shard_error(shard, r, e)))
            .collect::<Result<Vec<U>>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub workers: usize,
    pub times_ms: Vec<f64>,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingTable {
    pub stage: String,
    pub rows: Vec<TimingRow>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Times `run(workers)` `repetitions` times for each worker count.
pub fn benchmark<F>(
    stage: &str,
    worker_counts: &[usize],
    repetitions: usize,
    mut run: F,
) -> Result<TimingTable>
where
    F: FnMut(usize) -> Result<()>,
{
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    if worker_counts.contains(&0) {
        return Err(Error::invalid("worker counts must be at least 1"));
    }
    let mut rows = Vec::with_capacity(worker_counts.len());
    for &workers in worker_counts {
        let mut times_ms = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            run(workers)?;
            times_ms.push(start.elapsed().as_secs_f64() * 1e3);
        }
        let median_ms = median(&times_ms);
        rows.push(TimingRow {
            workers,
            times_ms,
            median_ms,
        });
    }
    Ok(TimingTable {
        stage: stage.to_owned(),
        rows,
    })
}

impl TimingTable {
    pub fn median_for(&self, workers: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.workers == workers)
            .map(|r| r.median_ms)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,workers,repetition,time_ms\n");
        for row in &self.rows {
            for (rep, t) in row.times_ms.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{:.3}", self.stage, row.workers, rep + 1, t);
            }
            let _ = writeln!(out, "{},{},median,{:.3}", self.stage, row.workers, row.median_ms);
        }
        out
    }
}

impl Display for TimingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Stage: {}", self.stage)?;
        writeln!(f, "{:>8}  {:>14}  runs (ms)", "Workers", "Median (ms)")?;
        for row in &self.rows {
            let runs: Vec<String> = row.times_ms.iter().map(|t| format!("{t:.1}")).collect();
            writeln!(
                f,
                "{:>8}  {:>14.1}  {}",
                row.workers,
                row.median_ms,
                runs.join(" ")
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub test_pct: u8,
    pub outcome: std::result::Result<SweepPoint, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    pub seed: u64,
    pub split_mode: SplitMode,
    pub nb_mode: NbMode,
    pub alpha: f64,
}

/// Split, train and test once per test percentage. A percentage that leaves
/// either side empty, or otherwise fails, is reported in its row and the
/// sweep carries on.
pub fn sweep_test_pct(
    vectors: &[SparseVector],
    vocab_size: usize,
    pcts: &[u8],
    settings: SweepSettings,
    plan: &ShardPlan,
) -> SweepTable {
    let rows = pcts
        .iter()
        .map(|&pct| SweepRow {
            test_pct: pct,
            outcome: sweep_point(vectors, vocab_size, pct, settings, plan),
        })
        .collect();
    SweepTable { rows }
}

fn sweep_point(
    vectors: &[SparseVector],
    vocab_size: usize,
    pct: u8,
    s: SweepSettings,
    plan: &ShardPlan,
) -> std::result::Result<SweepPoint, String> {
    let spec = SplitSpec::new(pct, s.seed, s.split_mode).map_err(|e| e.to_string())?;
    let (train, test) = vectorizer::split_vectors(vectors.to_vec(), &spec);
    if train.is_empty() || test.is_empty() {
        return Err(format!(
            "empty {} set",
            if train.is_empty() { "training" } else { "test" }
        ));
    }
    let model = bayes::train_nb(&train, vocab_size, s.nb_mode, s.alpha, plan).map_err(|e| e.to_string())?;
    let cm = bayes::test_nb(&model, &test, plan).map_err(|e| e.to_string())?;
    let acc = eval::accuracy(&cm).map_err(|e| e.to_string())?;
    Ok(SweepPoint {
        train_size: train.len(),
        test_size: test.len(),
        accuracy: acc.fraction,
    })
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test_pct,train_size,test_size,accuracy_pct,error\n");
        for row in &self.rows {
            let _ = match &row.outcome {
                Ok(p) => writeln!(
                    out,
                    "{},{},{},{:.4},",
                    row.test_pct,
                    p.train_size,
                    p.test_size,
                    p.accuracy * 100.0
                ),
                Err(e) => writeln!(out, "{},,,,{}", row.test_pct, e.replace(',', ";")),
            };
        }
        out
    }
}

impl Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>14}  {:>12}  {:>8}  {:>8}",
            "Test set (%)", "Accuracy (%)", "Train", "Test"
        )?;
        for row in &self.rows {
            match &row.outcome {
                Ok(p) => writeln!(
                    f,
                    "{:>14}  {:>12.4}  {:>8}  {:>8}",
                    row.test_pct,
                    p.accuracy * 100.0,
                    p.train_size,
                    p.test_size
                )?,
                Err(e) => writeln!(f, "{:>14}  error: {e}", row.test_pct)?,
            }
        }
        Ok(())
    }
}
