//! Adapter for black-box classifiers running as child processes.
//!
//! Each child speaks newline-delimited JSON over its standard streams:
//!
//! ```text
//! -> {"id": 7, "texts": ["good movie", "bad movie"]}
//! <- {"id": 7, "labels": [1, 0]}
//! ```
//!
//! One request per line, one response per line, UTF-8. A pool of children
//! can serve concurrent batches; each child handles one request at a time.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::BaseClassifier;
use crate::error::Result;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("failed to spawn `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o with child process: {0}")]
    Io(#[from] std::io::Error),
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("child process exited")]
    Exited,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("worker is unusable after an earlier transport error")]
    Poisoned,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub texts: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub labels: Vec<usize>,
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    poisoned: bool,
}

impl Worker {
    fn spawn(command: &str) -> Result<Self, TransportError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| TransportError::Spawn {
                command: command.to_owned(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
            poisoned: false,
        })
    }

    fn round_trip(
        &mut self,
        req: &Request,
        timeout: Duration,
        num_classes: usize,
    ) -> Result<Vec<usize>, TransportError> {
        if self.poisoned {
            return Err(TransportError::Poisoned);
        }
        let res = self.exchange(req, timeout, num_classes);
        if res.is_err() {
            self.poisoned = true;
        }
        res
    }

    fn exchange(
        &mut self,
        req: &Request,
        timeout: Duration,
        num_classes: usize,
    ) -> Result<Vec<usize>, TransportError> {
        let mut line = serde_json::to_string(req).expect("request serializes");
        line.push('\n');
        if let Err(e) = self.stdin.write_all(line.as_bytes()).and_then(|_| self.stdin.flush()) {
            return Err(if e.kind() == std::io::ErrorKind::BrokenPipe {
                TransportError::Exited
            } else {
                e.into()
            });
        }
        let reply = match self.lines.recv_timeout(timeout) {
            Ok(Ok(l)) => l,
            Ok(Err(e)) => return Err(e.into()),
            Err(RecvTimeoutError::Timeout) => return Err(TransportError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(TransportError::Exited),
        };
        let resp: Response = serde_json::from_str(&reply)
            .map_err(|e| TransportError::Malformed(format!("{e}: {reply:?}")))?;
        if resp.id != req.id {
            return Err(TransportError::IdMismatch {
                expected: req.id,
                got: resp.id,
            });
        }
        if resp.labels.len() != req.texts.len() {
            return Err(TransportError::LabelCount {
                expected: req.texts.len(),
                got: resp.labels.len(),
            });
        }
        if let Some(&label) = resp.labels.iter().find(|&&l| l >= num_classes) {
            return Err(TransportError::LabelOutOfRange { label, num_classes });
        }
        Ok(resp.labels)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A pool of child processes speaking the line protocol.
pub struct ExternalClassifier {
    workers: Vec<Mutex<Worker>>,
    next_worker: AtomicUsize,
    next_id: AtomicU64,
    num_classes: usize,
    timeout: Duration,
}

impl ExternalClassifier {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

    /// Spawns `pool_size` copies of `command` (run through `sh -c`).
    pub fn spawn(
        command: &str,
        pool_size: usize,
        num_classes: usize,
        timeout: Duration,
    ) -> Result<Self> {
        let workers = (0..pool_size.max(1))
            .map(|_| Worker::spawn(command).map(Mutex::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            workers,
            next_worker: AtomicUsize::new(0),
            next_id: AtomicU64::new(0),
            num_classes,
            timeout,
        })
    }

    pub fn pool_size(&self) -> usize {
        self.workers.len()
    }
}

impl BaseClassifier for ExternalClassifier {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let req = Request {
            id: self.next_id.fetch_add(1, Ordering::Relaxed),
            texts: texts.to_vec(),
        };
        let slot = self.next_worker.fetch_add(1, Ordering::Relaxed) % self.workers.len();
        let mut worker = self.workers[slot]
            .lock()
            .unwrap_or_else(|poison| poison.into_inner());
        Ok(worker.round_trip(&req, self.timeout, self.num_classes)?)
    }
}
