//! Directory-per-class corpus ingestion and the JSON Lines record file.
//!
//! A corpus root holds one subdirectory per class. Every regular file below a
//! class directory (nested directories included) becomes one
//! [`DocumentRecord`] keyed `/<label>/<relative path>`. The record file keeps
//! records in ascending byte order of their keys, one JSON object per line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::io;

/// One labeled document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub key: String,
    pub label: String,
    pub text: String,
}

impl DocumentRecord {
    pub fn new(label: &str, name: &str, text: impl Into<String>) -> Self {
        DocumentRecord {
            key: format!("/{label}/{name}"),
            label: label.to_owned(),
            text: text.into(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.label.is_empty() || self.label.contains('/') {
            return Err(format!("invalid label {:?}", self.label));
        }
        let prefix_ok = self
            .key
            .strip_prefix('/')
            .and_then(|k| k.strip_prefix(self.label.as_str()))
            .is_some_and(|k| k.starts_with('/'));
        if !prefix_ok {
            return Err(format!("key {:?} does not start with /{}/", self.key, self.label));
        }
        if self.text.starts_with('\u{feff}') {
            return Err("text starts with a byte-order mark".into());
        }
        Ok(())
    }
}

/// Handle to a written record file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: PathBuf,
    pub record_count: usize,
}

impl CorpusFile {
    pub fn read(&self) -> Result<Vec<DocumentRecord>> {
        read_corpus(&self.path)
    }
}

/// A file that could not be turned into a record during a lenient ingest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Collected {
    pub records: Vec<DocumentRecord>,
    pub skipped: Vec<SkippedFile>,
}

/// Walks a directory-per-class tree and returns its records sorted by key.
pub fn collect_directory(root: &Path, fail_fast: bool) -> Result<Collected> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut classes = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let file_type = entry.file_type().map_err(|e| Error::io(entry.path(), e))?;
        if !file_type.is_dir() {
            continue;
        }
        match entry.file_name().into_string() {
            Ok(label) => classes.push((label, entry.path())),
            Err(name) => {
                return Err(Error::invalid(format!(
                    "class directory name {name:?} is not valid UTF-8"
                )))
            }
        }
    }
    if classes.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no class directories",
            root.display()
        )));
    }
    classes.sort();

    let mut out = Collected::default();
    for (label, dir) in &classes {
        for entry in WalkDir::new(dir).sort_by_file_name() {
            let entry = match entry {
                Ok(entry) => entry,
                Err(e) => {
                    let path = e.path().map(Path::to_path_buf).unwrap_or_else(|| dir.clone());
                    skip_or_fail(&mut out, fail_fast, path, e.to_string())?;
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.path();
            let rel = path
                .strip_prefix(dir)
                .expect("walkdir yields paths below its root");
            let name = match relative_name(rel) {
                Some(name) => name,
                None => {
                    skip_or_fail(
                        &mut out,
                        fail_fast,
                        path.to_path_buf(),
                        "file name is not valid UTF-8".into(),
                    )?;
                    continue;
                }
            };
            match read_text(path) {
                Ok(text) => out.records.push(DocumentRecord::new(label, &name, text)),
                Err(reason) => skip_or_fail(&mut out, fail_fast, path.to_path_buf(), reason)?,
            }
        }
    }

    out.records.sort_by(|a, b| a.key.cmp(&b.key));
    if let Some(dup) = out.records.windows(2).find(|w| w[0].key == w[1].key) {
        return Err(Error::invalid(format!("duplicate document key {}", dup[0].key)));
    }
    Ok(out)
}

fn skip_or_fail(out: &mut Collected, fail_fast: bool, path: PathBuf, reason: String) -> Result<()> {
    if fail_fast {
        return Err(Error::invalid(format!("{}: {reason}", path.display())));
    }
    out.skipped.push(SkippedFile { path, reason });
    Ok(())
}

fn relative_name(rel: &Path) -> Option<String> {
    let parts = rel
        .components()
        .map(|c| c.as_os_str().to_str())
        .collect::<Option<Vec<_>>>()?;
    Some(parts.join("/"))
}

fn read_text(path: &Path) -> std::result::Result<String, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let text = String::from_utf8(bytes).map_err(|e| format!("invalid UTF-8: {e}"))?;
    Ok(match text.strip_prefix('\u{feff}') {
        Some(rest) => rest.to_owned(),
        None => text,
    })
}

/// Ingests `root` into a record file at `out`.
pub fn ingest_directory(root: &Path, out: &Path, fail_fast: bool) -> Result<(CorpusFile, Vec<SkippedFile>)> {
    let collected = collect_directory(root, fail_fast)?;
    if !collected.skipped.is_empty() {
        warn!(
            "skipped {} unreadable file(s) under {}",
            collected.skipped.len(),
            root.display()
        );
        for s in &collected.skipped {
            warn!("  {}: {}", s.path.display(), s.reason);
        }
    }
    let corpus = write_corpus(out, &collected.records)?;
    Ok((corpus, collected.skipped))
}

/// Writes records in ascending key order. Duplicate keys are rejected.
pub fn write_corpus(path: &Path, records: &[DocumentRecord]) -> Result<CorpusFile> {
    let mut sorted: Vec<&DocumentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    if let Some(dup) = sorted.windows(2).find(|w| w[0].key == w[1].key) {
        return Err(Error::invalid(format!("duplicate document key {}", dup[0].key)));
    }
    let mut w = io::create(path)?;
    for rec in &sorted {
        rec.validate().map_err(Error::Invalid)?;
        let line = serde_json::to_string(rec).expect("record serialization cannot fail");
        io::write_line(path, &mut w, &line)?;
    }
    io::finish(path, w)?;
    Ok(CorpusFile {
        path: path.to_path_buf(),
        record_count: sorted.len(),
    })
}

/// Reads a record file in stored order.
pub fn read_corpus(path: &Path) -> Result<Vec<DocumentRecord>> {
    let lines = io::read_lines(path)?;
    let mut records = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let rec: DocumentRecord =
            serde_json::from_str(line).map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        rec.validate().map_err(|m| Error::format(path, i + 1, m))?;
        records.push(rec);
    }
    Ok(records)
}

/// Distinct labels in lexicographic order.
pub fn label_index(records: &[DocumentRecord]) -> Vec<String> {
    records
        .iter()
        .map(|r| r.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
