//! Labeled text datasets: loading, writing, and a synthetic generator.
//!
//! Files are newline-delimited JSON (`{"text": ..., "label": ...}` per line)
//! or CSV with a `text,label` header, chosen by the `.csv` extension.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, SampleStream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub label: usize,
}

impl Example {
    pub fn new(text: impl Into<String>, label: usize) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    items: Vec<Example>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(items: Vec<Example>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("a dataset needs at least two classes"));
        }
        if let Some(bad) = items.iter().find(|e| e.label >= num_classes) {
            return Err(Error::invalid(format!(
                "label {} out of range for {num_classes} classes",
                bad.label
            )));
        }
        Ok(Self { items, num_classes })
    }

    /// Infers the class count as `max(2, max_label + 1)`.
    pub fn from_examples(items: Vec<Example>) -> Self {
        let num_classes = items.iter().map(|e| e.label + 1).max().unwrap_or(0).max(2);
        Self { items, num_classes }
    }

    pub fn items(&self) -> &[Example] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn distinct_labels(&self) -> BTreeSet<usize> {
        self.items.iter().map(|e| e.label).collect()
    }

    /// Raises the class count, e.g. to match a trained model.
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if num_classes < self.num_classes {
            return Err(Error::invalid(format!(
                "dataset has labels up to {} but model knows {num_classes} classes",
                self.num_classes - 1
            )));
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let items = if is_csv {
            read_csv(path)?
        } else {
            read_jsonl(path)?
        };
        Ok(Self::from_examples(items))
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for ex in &self.items {
            let line = serde_json::to_string(ex).expect("examples serialize");
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn read_jsonl(path: &Path) -> Result<Vec<Example>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: Example = serde_json::from_str(&line).map_err(|e| Error::DataRow {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(ex);
    }
    Ok(items)
}

fn read_csv(path: &Path) -> Result<Vec<Example>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Malformed {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let mut items = Vec::new();
    for row in reader.deserialize::<Example>() {
        let ex = row.map_err(|e| Error::DataRow {
            path: path.to_owned(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        items.push(ex);
    }
    Ok(items)
}

/// Marker token whose presence defines class 1 in the synthetic task.
pub const SYNTHETIC_MARKER: &str = "good";

/// Two-class keyword task. Class 1 texts contain [`SYNTHETIC_MARKER`]; class 0
/// texts never do. Each text has 20 to 40 tokens, about half of them drawn
/// from a small class-specific cue vocabulary and the rest from a shared
/// neutral vocabulary, so evidence survives heavy deletion.
pub fn synthetic_keyword_dataset(n: usize, seed: u64) -> LabeledDataset {
    const CUES: usize = 10;
    const NEUTRAL: usize = 100;
    let items = (0..n)
        .map(|i| {
            let mut rng = SampleStream::new(seed, Domain::Dataset, i as u64).rng(0);
            let label = rng.random_range(0..2usize);
            let len = rng.random_range(20..=40usize);
            let mut tokens: Vec<String> = (0..len)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        let cue = rng.random_range(0..CUES);
                        if label == 1 {
                            format!("pos{cue}")
                        } else {
                            format!("neg{cue}")
                        }
                    } else {
                        format!("w{}", rng.random_range(0..NEUTRAL))
                    }
                })
                .collect();
            if label == 1 {
                let at = rng.random_range(0..=tokens.len());
                tokens.insert(at, SYNTHETIC_MARKER.to_owned());
            }
            Example::new(tokens.join(" "), label)
        })
        .collect();
    LabeledDataset::new(items, 2).expect("labels are 0 or 1")
}
