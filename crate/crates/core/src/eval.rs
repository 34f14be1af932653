//! Confusion matrices, agreement statistics and the text report.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Rows are true labels, columns predicted labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let cm = ConfusionMatrix { labels, counts };
        cm.validate().map_err(Error::Invalid)?;
        Ok(cm)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let n = self.labels.len();
        if n == 0 {
            return Err("confusion matrix needs at least one label".into());
        }
        if self.counts.len() != n || self.counts.iter().any(|r| r.len() != n) {
            return Err(format!("counts must be a {n}×{n} matrix"));
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    /// Cell-wise sum; both matrices must share labels.
    pub fn merge(mut self, other: &ConfusionMatrix) -> Result<Self> {
        if self.labels != other.labels {
            return Err(Error::invalid("cannot merge matrices with different labels"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(self)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization cannot fail")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_string(path, &(self.to_json() + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cm: ConfusionMatrix =
            serde_json::from_str(&text).map_err(|e| Error::format(path, 1, e.to_string()))?;
        cm.validate().map_err(|m| Error::format(path, 1, m))?;
        Ok(cm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub correct: u64,
    pub incorrect: u64,
    pub fraction: f64,
}

fn require_total(cm: &ConfusionMatrix) -> Result<u64> {
    match cm.total() {
        0 => Err(Error::invalid("confusion matrix is empty (total = 0)")),
        n => Ok(n),
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<Accuracy> {
    let total = require_total(cm)?;
    let correct = cm.trace();
    Ok(Accuracy {
        correct,
        incorrect: total - correct,
        fraction: correct as f64 / total as f64,
    })
}

/// Cohen's kappa, `(Po − Pe) / (1 − Pe)`; 0 when `Pe = 1`.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = u128::from(require_total(cm)?);
    let chance: u128 = cm
        .row_sums()
        .into_iter()
        .zip(cm.col_sums())
        .map(|(r, c)| u128::from(r) * u128::from(c))
        .sum();
    let n2 = n * n;
    if chance == n2 {
        return Ok(0.0);
    }
    // Multiply through by n²: (n·trace − Σ r·c) / (n² − Σ r·c).
    let num = (n * u128::from(cm.trace())) as i128 - chance as i128;
    Ok(num as f64 / (n2 - chance) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMetrics {
    pub per_class: Vec<ClassStats>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision/recall/F1 and their support-weighted averages.
pub fn weighted_metrics(cm: &ConfusionMatrix) -> Result<WeightedMetrics> {
    let total = require_total(cm)? as f64;
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let per_class: Vec<ClassStats> = (0..cm.len())
        .map(|i| {
            let hit = cm.counts[i][i];
            let precision = ratio(hit, cols[i]);
            let recall = ratio(hit, rows[i]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassStats {
                label: cm.labels[i].clone(),
                precision,
                recall,
                f1,
                support: rows[i],
            }
        })
        .collect();
    let weighted = |f: fn(&ClassStats) -> f64| -> f64 {
        per_class.iter().map(|s| s.support as f64 / total * f(s)).sum()
    };
    Ok(WeightedMetrics {
        precision: weighted(|s| s.precision),
        recall: weighted(|s| s.recall),
        f1: weighted(|s| s.f1),
        per_class,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub total: u64,
    pub accuracy: Accuracy,
    pub kappa: f64,
    pub weighted: WeightedMetrics,
}

pub fn evaluate(cm: &ConfusionMatrix) -> Result<EvalReport> {
    Ok(EvalReport {
        total: cm.total(),
        accuracy: accuracy(cm)?,
        kappa: kappa(cm)?,
        weighted: weighted_metrics(cm)?,
    })
}

/// Column tags `a, b, …, z, aa, ab, …`.
pub fn column_tag(mut i: usize) -> String {
    let mut tag = Vec::new();
    loop {
        tag.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    tag.reverse();
    String::from_utf8(tag).expect("ascii")
}

const RULE_HEAVY: &str = "=======================================================";
const RULE_LIGHT: &str = "-------------------------------------------------------";

/// Renders Summary, Confusion Matrix and Statistics sections. `header` lines
/// are echoed first as `# ` comments; `elapsed`, when given, is appended as
/// the last line.
pub fn render_report(cm: &ConfusionMatrix, header: &[String], elapsed: Option<Duration>) -> Result<String> {
    let r = evaluate(cm)?;
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    if !header.is_empty() {
        out.push('\n');
    }
    let pct = |n: u64| n as f64 / r.total as f64 * 100.0;

    let _ = writeln!(out, "{RULE_HEAVY}\nSummary\n{RULE_LIGHT}");
    let _ = writeln!(
        out,
        "{:<40}: {:>10}    {:>9.4}%",
        "Correctly Classified Instances",
        r.accuracy.correct,
        pct(r.accuracy.correct)
    );
    let _ = writeln!(
        out,
        "{:<40}: {:>10}    {:>9.4}%",
        "Incorrectly Classified Instances",
        r.accuracy.incorrect,
        pct(r.accuracy.incorrect)
    );
    let _ = writeln!(out, "{:<40}: {:>10}", "Total Classified Instances", r.total);
    out.push('\n');

    let _ = writeln!(out, "{RULE_HEAVY}\nConfusion Matrix\n{RULE_LIGHT}");
    let tags: Vec<String> = (0..cm.len()).map(column_tag).collect();
    let width = cm
        .counts
        .iter()
        .flatten()
        .map(|c| c.to_string().len())
        .chain(tags.iter().map(String::len))
        .max()
        .unwrap_or(1)
        .max(4)
        + 1;
    for tag in &tags {
        let _ = write!(out, "{tag:<width$}");
    }
    out.push_str("<--Classified as\n");
    let rows = cm.row_sums();
    let total_width = rows.iter().map(|n| n.to_string().len()).max().unwrap_or(1);
    let tag_width = tags.iter().map(String::len).max().unwrap_or(1);
    for (i, row) in cm.counts.iter().enumerate() {
        for c in row {
            let _ = write!(out, "{c:<width$}");
        }
        let _ = writeln!(
            out,
            "| {:>total_width$} {:<tag_width$} = {}",
            rows[i], tags[i], cm.labels[i]
        );
    }
    out.push('\n');

    let _ = writeln!(out, "{RULE_HEAVY}\nStatistics\n{RULE_LIGHT}");
    let stat = |out: &mut String, name: &str, value: String| {
        let _ = writeln!(out, "{name:<28}{value:>14}");
    };
    stat(&mut out, "Kappa", format!("{:.4}", r.kappa));
    stat(
        &mut out,
        "Accuracy",
        format!("{:.4}%", r.accuracy.fraction * 100.0),
    );
    stat(
        &mut out,
        "Weighted precision",
        format!("{:.4}", r.weighted.precision),
    );
    stat(&mut out, "Weighted recall", format!("{:.4}", r.weighted.recall));
    stat(&mut out, "Weighted F1 score", format!("{:.4}", r.weighted.f1));

    if let Some(elapsed) = elapsed {
        let ms = elapsed.as_millis();
        let _ = writeln!(
            out,
            "\nProgram took {ms} ms (Minutes: {:.4})",
            ms as f64 / 60_000.0
        );
    }
    Ok(out)
}
