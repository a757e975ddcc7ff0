//! Bounded-concurrency batch execution with order-preserving results, plus
//! the line-oriented checkpoint files behind `--resume`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::future::Future;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use futures::stream::{self, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Runs `f` over all items with at most `concurrency` futures in flight and
/// returns results in input order regardless of completion order.
pub async fn run_ordered<T, R, F, Fut>(items: Vec<T>, concurrency: usize, f: F) -> Vec<R>
where
    F: Fn(usize, T) -> Fut,
    Fut: Future<Output = R>,
{
    let tasks = items.into_iter().enumerate().map(|(idx, item)| {
        let fut = f(idx, item);
        async move { (idx, fut.await) }
    });
    let mut results: Vec<(usize, R)> = stream::iter(tasks)
        .buffer_unordered(concurrency.max(1))
        .collect()
        .await;
    results.sort_by_key(|(idx, _)| *idx);
    results.into_iter().map(|(_, r)| r).collect()
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry<T> {
    id: String,
    value: T,
}

/// Completed per-sample results persisted during a run. Resumed runs skip
/// any sample whose success record is already on disk; failures are not
/// recorded and therefore retried.
pub struct Checkpoint<T> {
    completed: HashMap<String, T>,
}

impl<T: DeserializeOwned> Checkpoint<T> {
    /// Loads prior completions from `path`. A partially written trailing
    /// line (interrupted run) is skipped rather than treated as fatal.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let mut completed = HashMap::new();
        match File::open(path) {
            Ok(file) => {
                for line in BufReader::new(file).lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<CheckpointEntry<T>>(&line) {
                        Ok(entry) => {
                            completed.insert(entry.id, entry.value);
                        }
                        Err(e) => log::warn!("skipping unparsable checkpoint line: {e}"),
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(Checkpoint { completed })
    }

    pub fn empty() -> Self {
        Checkpoint { completed: HashMap::new() }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.completed.contains_key(id)
    }

    pub fn take(&mut self, id: &str) -> Option<T> {
        self.completed.remove(id)
    }

    pub fn len(&self) -> usize {
        self.completed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.completed.is_empty()
    }
}

/// Append-only checkpoint sink shared across concurrent workers. Each
/// record is flushed as one line so an interrupted run loses at most the
/// line being written.
pub struct CheckpointWriter {
    path: PathBuf,
    sink: Mutex<BufWriter<File>>,
}

impl CheckpointWriter {
    pub fn append_to(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CheckpointWriter {
            path: path.to_path_buf(),
            sink: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn record<T: Serialize>(&self, id: &str, value: &T) -> std::io::Result<()> {
        let line = serde_json::to_string(&CheckpointEntry {
            id: id.to_owned(),
            value,
        })
        .expect("checkpoint serialization cannot fail");
        let mut sink = self.sink.lock().expect("checkpoint sink poisoned");
        sink.write_all(line.as_bytes())?;
        sink.write_all(b"\n")?;
        sink.flush()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
