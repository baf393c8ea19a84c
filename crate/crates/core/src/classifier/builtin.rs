//! Multinomial bag-of-tokens model with additive smoothing.
//!
//! The model stores integer counts; log-probabilities are derived when the
//! model is built or loaded. Model files are JSON with a format tag and
//! version, and serialize byte-identically for identical counts.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{argmax_lowest, BaseClassifier};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::mechanisms::MechanismParams;
use crate::par;
use crate::rng::{Domain, SampleStream};
use crate::tokenization::{tokenize, Scheme};

pub const DEFAULT_SAMPLES_PER_INSTANCE: usize = 8;
pub const MODEL_FORMAT: &str = "editcert-builtin-model";
pub const MODEL_VERSION: u32 = 1;
const SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    smoothing: f64,
    num_classes: usize,
    mechanism: MechanismParams,
    samples_per_instance: usize,
    seed: u64,
    class_counts: Vec<u64>,
    vocabulary: Vec<String>,
    /// `token_counts[c][t]` occurrences of vocabulary token `t` in class `c`.
    token_counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct BuiltinModel {
    file: ModelFile,
    index: HashMap<String, usize>,
    log_prior: Vec<f64>,
    /// `log_likelihood[t * num_classes + c]`
    log_likelihood: Vec<f64>,
}

impl PartialEq for BuiltinModel {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

impl BuiltinModel {
    fn from_file(file: ModelFile) -> Result<Self> {
        let k = file.num_classes;
        let v = file.vocabulary.len();
        if file.class_counts.len() != k || file.token_counts.len() != k {
            return Err(Error::invalid("model class dimensions disagree"));
        }
        if file.token_counts.iter().any(|row| row.len() != v) {
            return Err(Error::invalid("model vocabulary dimensions disagree"));
        }
        let total: u64 = file.class_counts.iter().sum();
        let log_prior = file
            .class_counts
            .iter()
            .map(|&c| (c as f64 / total as f64).ln())
            .collect();
        let mut log_likelihood = vec![0.0; v * k];
        for (c, row) in file.token_counts.iter().enumerate() {
            let denom = row.iter().sum::<u64>() as f64 + SMOOTHING * v as f64;
            for (t, &count) in row.iter().enumerate() {
                log_likelihood[t * k + c] = ((count as f64 + SMOOTHING) / denom).ln();
            }
        }
        let index = file
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            file,
            index,
            log_prior,
            log_likelihood,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.file.vocabulary
    }

    pub fn mechanism(&self) -> &MechanismParams {
        &self.file.mechanism
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.file.class_counts
    }

    /// Per-class log-probability of each vocabulary token.
    pub fn token_log_probs(&self, class: usize) -> Vec<f64> {
        let k = self.file.num_classes;
        (0..self.file.vocabulary.len())
            .map(|t| self.log_likelihood[t * k + class])
            .collect()
    }

    /// The most frequent training tokens, most frequent first, ties by
    /// vocabulary order.
    pub fn frequent_tokens(&self, k: usize) -> Vec<String> {
        let mut totals: Vec<(u64, usize)> = (0..self.file.vocabulary.len())
            .map(|t| (self.file.token_counts.iter().map(|row| row[t]).sum(), t))
            .collect();
        totals.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        totals
            .into_iter()
            .take(k)
            .map(|(_, t)| self.file.vocabulary[t].clone())
            .collect()
    }

    /// Unnormalized class log-scores of a text. Unknown tokens are ignored.
    pub fn scores(&self, text: &str) -> Vec<f64> {
        let k = self.file.num_classes;
        let mut s = self.log_prior.clone();
        for tok in text.split_whitespace() {
            if let Some(&t) = self.index.get(tok) {
                for (c, acc) in s.iter_mut().enumerate() {
                    *acc += self.log_likelihood[t * k + c];
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| Error::invalid(format!("model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::invalid(format!("not a model file (format {:?})", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        Self::from_file(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = self.to_json();
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json).map_err(|e| Error::Malformed {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }
}

impl BaseClassifier for BuiltinModel {
    fn num_classes(&self) -> usize {
        self.file.num_classes
    }

    fn classify_batch(&self, texts: &[String]) -> Result<Vec<usize>> {
        Ok(texts.iter().map(|t| argmax_lowest(&self.scores(t))).collect())
    }
}

/// Fits the model on `samples_per_instance` perturbed copies of every
/// training text.
pub fn train_builtin(
    data: &LabeledDataset,
    mech: &MechanismParams,
    samples_per_instance: usize,
    seed: u64,
) -> Result<BuiltinModel> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.distinct_labels().len() < 2 {
        return Err(Error::SingleClass);
    }
    if samples_per_instance == 0 {
        return Err(Error::invalid("samples_per_instance must be at least 1"));
    }
    mech.validate()?;

    let perturbed: Vec<Vec<String>> = par::map_slice(
        &data.items().iter().enumerate().collect::<Vec<_>>(),
        |&(i, ex)| {
            let x = tokenize(&ex.text, Scheme::Whitespace);
            let stream = SampleStream::new(seed, Domain::Training, i as u64);
            (0..samples_per_instance as u64)
                .flat_map(|s| mech.perturb(&x, &mut stream.rng(s)).into_tokens())
                .collect()
        },
    );

    let k = data.num_classes();
    let mut counts: Vec<BTreeMap<&str, u64>> = vec![BTreeMap::new(); k];
    let mut class_counts = vec![0u64; k];
    for (ex, toks) in data.items().iter().zip(&perturbed) {
        class_counts[ex.label] += 1;
        for t in toks {
            *counts[ex.label].entry(t.as_str()).or_default() += 1;
        }
    }
    let mut vocabulary: Vec<String> = counts
        .iter()
        .flat_map(|m| m.keys().map(|s| s.to_string()))
        .collect();
    vocabulary.sort();
    vocabulary.dedup();
    let token_counts = counts
        .iter()
        .map(|m| {
            vocabulary
                .iter()
                .map(|t| m.get(t.as_str()).copied().unwrap_or(0))
                .collect()
        })
        .collect();

    BuiltinModel::from_file(ModelFile {
        format: MODEL_FORMAT.to_owned(),
        version: MODEL_VERSION,
        smoothing: SMOOTHING,
        num_classes: k,
        mechanism: mech.clone(),
        samples_per_instance,
        seed,
        class_counts,
        vocabulary,
        token_counts,
    })
}
