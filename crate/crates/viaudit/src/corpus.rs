//! Sample data model and line-delimited corpus I/O.
//!
//! Corpora and audit outputs are one JSON object per line so multi-hundred-K
//! sample pools stream in constant memory. Readers surface malformed lines
//! with their line numbers instead of dropping them.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// One image-instruction-response triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    #[serde(rename = "image")]
    pub image_ref: String,
    pub instruction: String,
    pub response: String,
}

impl Sample {
    /// Field-level validity: non-empty id, non-blank instruction/response.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.instruction.trim().is_empty() {
            return Err("empty instruction".into());
        }
        if self.response.trim().is_empty() {
            return Err("empty response".into());
        }
        Ok(())
    }
}

/// Per-axis judge explanations.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Explanations {
    pub logic: String,
    pub knowledge: String,
    pub vision: String,
}

/// Backend-call counts per decomposition step (includes the successful call).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepAttempts {
    pub tagging: u32,
    pub distillation: u32,
    pub synthesis: u32,
}

/// Pipeline/version metadata attached to each audit record.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub decompose_model: String,
    pub assess_model: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub defaulted_axes: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback_tagging: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sampling_override: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub empty_visual_summary: bool,
    pub attempts: StepAttempts,
}

/// Scored audit output for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    pub s_l: u8,
    pub s_k: u8,
    pub s_v: u8,
    pub overall: f64,
    pub explanations: Explanations,
    pub annotated_response: String,
    pub visual_summary: String,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("i/o error at {path} line {line}: {source}")]
    Io {
        path: PathBuf,
        line: usize,
        source: std::io::Error,
    },
    #[error("malformed record at {path} line {line}: {detail}")]
    Malformed {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("duplicate id {id:?} at {path} line {line}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("write to {path} failed: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Streaming reader over a sample corpus. Yields samples in file order;
/// malformed lines and duplicate ids come back as errors carrying the
/// 1-based line number.
pub struct CorpusReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen_ids: HashSet<String>,
}

impl CorpusReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| CorpusError::Open {
            path: path.clone(),
            source,
        })?;
        Ok(CorpusReader {
            path,
            lines: BufReader::new(file).lines(),
            line_no: 0,
            seen_ids: HashSet::new(),
        })
    }
}

impl Iterator for CorpusReader {
    type Item = Result<Sample, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(CorpusError::Io {
                        path: self.path.clone(),
                        line: self.line_no + 1,
                        source,
                    }))
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let sample: Sample = match serde_json::from_str(&line) {
                Ok(sample) => sample,
                Err(e) => {
                    return Some(Err(CorpusError::Malformed {
                        path: self.path.clone(),
                        line: self.line_no,
                        detail: e.to_string(),
                    }))
                }
            };
            if let Err(detail) = sample.validate() {
                return Some(Err(CorpusError::Malformed {
                    path: self.path.clone(),
                    line: self.line_no,
                    detail,
                }));
            }
            if !self.seen_ids.insert(sample.id.clone()) {
                return Some(Err(CorpusError::DuplicateId {
                    path: self.path.clone(),
                    line: self.line_no,
                    id: sample.id,
                }));
            }
            return Some(Ok(sample));
        }
    }
}

/// Opens a lazy corpus reader.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusReader, CorpusError> {
    CorpusReader::open(path)
}

/// Loads a whole corpus, failing on the first malformed line or duplicate id.
pub fn load_corpus_vec(path: impl AsRef<Path>) -> Result<Vec<Sample>, CorpusError> {
    load_corpus(path)?.collect()
}

/// Writes records as one JSON object per line, in input order.
pub fn write_jsonl<T: Serialize>(
    records: impl IntoIterator<Item = T>,
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let wrap = |source| CorpusError::Write { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(&record).expect("record serialization cannot fail");
        out.write_all(line.as_bytes()).map_err(wrap)?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

/// Reads a line-delimited file of any record type, with line numbers on
/// parse failures.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            detail: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Convenience for audit outputs.
pub fn write_records(
    records: impl IntoIterator<Item = AuditRecord>,
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    write_jsonl(records, path)
}
