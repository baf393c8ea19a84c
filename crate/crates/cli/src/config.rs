//! Run settings resolved as flag > config file > default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use editcert::attacks::{DEFAULT_MAX_QUERIES, DEFAULT_PREDICTION_SAMPLES, DEFAULT_TIMEOUT_SECONDS};
use editcert::certify::{BoundMode, CertifyParams, DEFAULT_ALPHA, DEFAULT_N_CERT, DEFAULT_N_PRED};
use editcert::edit_metrics::{EditOps, DEFAULT_VOCAB_SIZE};
use editcert::mechanisms::MechanismKind;
use editcert::Scheme;

use crate::Usage;

/// Deletion rate used when neither flags, config nor a model supply one.
pub const DEFAULT_RATE: f64 = 0.9;

const KEYS: &[&str] = &[
    "mechanism",
    "rate",
    "n_pred",
    "n_cert",
    "alpha",
    "bound_mode",
    "ops",
    "vocab_size",
    "seed",
    "timeout_seconds",
    "max_queries",
    "external_cmd",
    "prediction_samples",
    "scheme",
    "num_classes",
    "pool_size",
];

/// Flags every subcommand accepts. Unset flags fall back to `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat `key = value` file supplying defaults for these flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// deletion or masking
    #[arg(long, global = true)]
    pub mechanism: Option<String>,
    /// Deletion or masking rate
    #[arg(long, global = true)]
    pub rate: Option<f64>,
    #[arg(long, global = true)]
    pub n_pred: Option<u64>,
    #[arg(long, global = true)]
    pub n_cert: Option<u64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// bonferroni-cp or complement
    #[arg(long, global = true)]
    pub bound_mode: Option<String>,
    /// Edit operations: dis, d, i, s, di, ds or is
    #[arg(long, global = true)]
    pub ops: Option<String>,
    #[arg(long, global = true)]
    pub vocab_size: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub timeout_seconds: Option<f64>,
    #[arg(long, global = true)]
    pub max_queries: Option<u64>,
    /// Shell command speaking the JSON line protocol
    #[arg(long, global = true)]
    pub external_cmd: Option<String>,
    /// Monte Carlo samples per query under attack
    #[arg(long, global = true)]
    pub prediction_samples: Option<u64>,
    /// whitespace or character
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Classes returned by the external classifier
    #[arg(long, global = true)]
    pub num_classes: Option<usize>,
    /// External classifier processes
    #[arg(long, global = true)]
    pub pool_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mechanism: MechanismKind,
    /// `None` lets a model file supply its training rate.
    pub rate: Option<f64>,
    pub n_pred: u64,
    pub n_cert: u64,
    pub alpha: f64,
    pub bound_mode: BoundMode,
    pub ops: EditOps,
    pub vocab_size: u64,
    pub seed: u64,
    pub timeout_seconds: f64,
    pub max_queries: u64,
    pub external_cmd: Option<String>,
    pub prediction_samples: u64,
    pub scheme: Scheme,
    pub num_classes: usize,
    pub pool_size: usize,
}

impl RunConfig {
    pub fn certify_params(&self) -> CertifyParams {
        CertifyParams {
            n_pred: self.n_pred,
            n_cert: self.n_cert,
            alpha: self.alpha,
            bound_mode: self.bound_mode,
            vocab_size: self.vocab_size,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment, dashes in keys read as
/// underscores.
pub fn parse_config(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Usage(format!("{}:{}: expected key = value", path.display(), i + 1)).into());
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Usage(format!("{}:{}: unknown key {key:?}", path.display(), i + 1)).into());
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Usage(format!("config value {key} = {v:?} is not valid")).into()),
    }
}

fn parse_flag<T: FromStr>(v: Option<String>, name: &str) -> Result<Option<T>> {
    v.map(|s| s.parse().map_err(|_| Usage(format!("invalid --{name} {s:?}")).into()))
        .transpose()
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_config(&text, p)?
            }
            None => BTreeMap::new(),
        };
        let c = self.clone();
        Ok(RunConfig {
            mechanism: pick(parse_flag(c.mechanism, "mechanism")?, &file, "mechanism")?
                .unwrap_or(MechanismKind::Deletion),
            rate: pick(c.rate, &file, "rate")?,
            n_pred: pick(c.n_pred, &file, "n_pred")?.unwrap_or(DEFAULT_N_PRED),
            n_cert: pick(c.n_cert, &file, "n_cert")?.unwrap_or(DEFAULT_N_CERT),
            alpha: pick(c.alpha, &file, "alpha")?.unwrap_or(DEFAULT_ALPHA),
            bound_mode: pick(parse_flag(c.bound_mode, "bound-mode")?, &file, "bound_mode")?
                .unwrap_or_default(),
            ops: pick(parse_flag(c.ops, "ops")?, &file, "ops")?.unwrap_or(EditOps::FULL),
            vocab_size: pick(c.vocab_size, &file, "vocab_size")?.unwrap_or(DEFAULT_VOCAB_SIZE),
            seed: pick(c.seed, &file, "seed")?.unwrap_or(0),
            timeout_seconds: pick(c.timeout_seconds, &file, "timeout_seconds")?
                .unwrap_or(DEFAULT_TIMEOUT_SECONDS),
            max_queries: pick(c.max_queries, &file, "max_queries")?.unwrap_or(DEFAULT_MAX_QUERIES),
            external_cmd: pick(c.external_cmd, &file, "external_cmd")?,
            prediction_samples: pick(c.prediction_samples, &file, "prediction_samples")?
                .unwrap_or(DEFAULT_PREDICTION_SAMPLES),
            scheme: pick(parse_flag(c.scheme, "scheme")?, &file, "scheme")?.unwrap_or(Scheme::Whitespace),
            num_classes: pick(c.num_classes, &file, "num_classes")?.unwrap_or(2),
            pool_size: pick(c.pool_size, &file, "pool_size")?.unwrap_or(1),
        })
    }
}
