//! Monte Carlo smoothed prediction and certification.
//!
//! Prediction and certification draw from disjoint counter ranges
//! ([`Domain::Prediction`] and [`Domain::Certification`]), so the
//! certification sample is independent of the one that picked the class.

mod bounds;
mod pairwise;
mod radius;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bounds::{clopper_pearson_lower, clopper_pearson_upper};
pub use pairwise::pairwise_bounds;
pub use radius::{certified_radius, radius_from_margin, UNBOUNDED_RADIUS};

use crate::classifier::{argmax_lowest, BaseClassifier};
use crate::edit_metrics::{
    lev_ball_cardinality_lower_bound, log10_biguint, CardinalityParams, EditOps,
    DEFAULT_VOCAB_SIZE,
};
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismKind, MechanismParams};
use crate::par;
use crate::rng::{Domain, SampleStream};
use crate::tokenization::{detokenize, TokenSeq};

/// Perturbed inputs sent to the base classifier per call.
pub const BATCH_SIZE: usize = 256;
pub const DEFAULT_N_PRED: u64 = 1000;
pub const DEFAULT_N_CERT: u64 = 4000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Vote counts of the base classifier over perturbed copies of an input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreEstimate {
    pub counts: Vec<u64>,
    pub num_samples: u64,
}

impl ScoreEstimate {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        let num_samples = counts.iter().sum();
        if num_samples == 0 {
            return Err(Error::invalid("score estimate has no samples"));
        }
        Ok(Self {
            counts,
            num_samples,
        })
    }

    /// Majority class, ties toward the lowest index.
    pub fn top_class(&self) -> usize {
        argmax_lowest(&self.counts)
    }

    /// Most voted class other than `class`, ties toward the lowest index.
    pub fn runner_up(&self, class: usize) -> usize {
        (0..self.counts.len())
            .filter(|&c| c != class)
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if self.counts[b] >= self.counts[c] => Some(b),
                _ => Some(c),
            })
            .expect("at least two classes")
    }

    pub fn fraction(&self, class: usize) -> f64 {
        self.counts[class] as f64 / self.num_samples as f64
    }
}

/// How the joint bounds on the top and runner-up scores are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    /// Clopper–Pearson at level `α/2` for each of the two classes.
    #[default]
    BonferroniCp,
    /// One Clopper–Pearson bound at level `α`; `μ_y' = 1 − μ_y`.
    Complement,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMode::BonferroniCp => "bonferroni-cp",
            BoundMode::Complement => "complement",
        })
    }
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bonferroni-cp" => Ok(BoundMode::BonferroniCp),
            "complement" => Ok(BoundMode::Complement),
            other => Err(Error::invalid(format!("unknown bound mode {other:?}"))),
        }
    }
}

/// Lower bound on the top score and upper bound on the runner-up score,
/// jointly valid with probability `1 − alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBounds {
    pub top_class: usize,
    pub runner_up: usize,
    pub mu_y: f64,
    pub mu_yprime: f64,
    pub alpha: f64,
}

impl ScoreBounds {
    pub fn margin(&self) -> f64 {
        self.mu_y - self.mu_yprime
    }

    pub fn crossed(&self) -> bool {
        self.mu_y < self.mu_yprime
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha {alpha} must lie in (0, 1)")))
    }
}

/// Bounds for the majority class of `est`.
pub fn score_bounds(est: &ScoreEstimate, alpha: f64, mode: BoundMode) -> Result<ScoreBounds> {
    score_bounds_for(est, est.top_class(), alpha, mode)
}

/// Bounds treating `class` as the top class.
pub fn score_bounds_for(
    est: &ScoreEstimate,
    class: usize,
    alpha: f64,
    mode: BoundMode,
) -> Result<ScoreBounds> {
    check_alpha(alpha)?;
    if class >= est.counts.len() {
        return Err(Error::invalid(format!("class {class} out of range")));
    }
    let n = est.num_samples;
    let runner_up = est.runner_up(class);
    let (mu_y, mu_yprime) = match mode {
        BoundMode::BonferroniCp => (
            clopper_pearson_lower(est.counts[class], n, alpha / 2.0),
            clopper_pearson_upper(est.counts[runner_up], n, alpha / 2.0),
        ),
        BoundMode::Complement => {
            let lo = clopper_pearson_lower(est.counts[class], n, alpha);
            (lo, 1.0 - lo)
        }
    };
    Ok(ScoreBounds {
        top_class: class,
        runner_up,
        mu_y,
        mu_yprime,
        alpha,
    })
}

/// Base classifier labels for `count` perturbed copies of `x`, draw `i`
/// using generator `stream.rng(i)`.
pub fn sample_labels<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    mech: &MechanismParams,
    count: u64,
    stream: SampleStream,
) -> Result<Vec<usize>> {
    let batches = (count as usize).div_ceil(BATCH_SIZE);
    let labels = par::try_map_indexed(batches, |b| {
        let start = (b * BATCH_SIZE) as u64;
        let end = (start + BATCH_SIZE as u64).min(count);
        let texts: Vec<String> = (start..end)
            .map(|i| detokenize(&mech.perturb(x, &mut stream.rng(i))))
            .collect();
        f.classify_batch(&texts)
    })?;
    Ok(labels.into_iter().flatten().collect())
}

/// Vote counts over `count` perturbed copies.
pub fn sample_counts<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    mech: &MechanismParams,
    count: u64,
    stream: SampleStream,
) -> Result<ScoreEstimate> {
    if count == 0 {
        return Err(Error::invalid("need at least one Monte Carlo sample"));
    }
    let mut counts = vec![0u64; f.num_classes()];
    for label in sample_labels(f, x, mech, count, stream)? {
        let slot = counts
            .get_mut(label)
            .ok_or_else(|| Error::invalid(format!("classifier returned label {label}")))?;
        *slot += 1;
    }
    ScoreEstimate::new(counts)
}

/// Majority vote over `n_samples` perturbed copies of `x`.
pub fn smoothed_predict<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    mech: &MechanismParams,
    n_samples: u64,
    stream: SampleStream,
) -> Result<(usize, ScoreEstimate)> {
    let est = sample_counts(f, x, mech, n_samples, stream)?;
    Ok((est.top_class(), est))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub n_pred: u64,
    pub n_cert: u64,
    pub alpha: f64,
    pub bound_mode: BoundMode,
    /// Vocabulary size used for the certified cardinality.
    pub vocab_size: u64,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            n_pred: DEFAULT_N_PRED,
            n_cert: DEFAULT_N_CERT,
            alpha: DEFAULT_ALPHA,
            bound_mode: BoundMode::BonferroniCp,
            vocab_size: DEFAULT_VOCAB_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub predicted: usize,
    pub abstained: bool,
    pub p_del: f64,
    pub alpha: f64,
    pub bounds: ScoreBounds,
    pub radius_by_ops: BTreeMap<EditOps, u32>,
    /// `log10` of the Levenshtein-ball cardinality lower bound at the
    /// full-ops radius.
    pub log10_cardinality_lb: f64,
    pub prediction_counts: ScoreEstimate,
    pub certification_counts: ScoreEstimate,
}

impl Certificate {
    pub fn radius(&self, ops: EditOps) -> u32 {
        self.radius_by_ops[&ops]
    }
}

/// Radii for every operation set, all zero when the bounds cross.
pub fn radii_for_bounds(b: &ScoreBounds, p_del: f64) -> Result<BTreeMap<EditOps, u32>> {
    EditOps::ALL
        .iter()
        .map(|&ops| Ok((ops, certified_radius(b, p_del, ops)?)))
        .collect()
}

/// Predicts with `n_pred` samples and certifies with an independent batch
/// of `n_cert` samples. `seed` and `instance` address the random draws.
///
/// When the certification majority disagrees with the prediction, or the
/// bounds cross, the prediction is still reported but every radius is 0.
pub fn certify<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    mech: &MechanismParams,
    params: &CertifyParams,
    seed: u64,
    instance: u64,
) -> Result<Certificate> {
    if mech.kind != MechanismKind::Deletion {
        return Err(Error::invalid("certificates require the deletion mechanism"));
    }
    let p_del = mech.rate;
    if !(p_del > 0.0 && p_del < 1.0) {
        return Err(Error::invalid(format!("p_del {p_del} must lie in (0, 1)")));
    }
    check_alpha(params.alpha)?;
    let stream = SampleStream::new(seed, Domain::Prediction, instance);
    let (predicted, prediction_counts) = smoothed_predict(f, x, mech, params.n_pred, stream)?;
    let certification_counts =
        sample_counts(f, x, mech, params.n_cert, stream.with_domain(Domain::Certification))?;

    let bounds = score_bounds_for(&certification_counts, predicted, params.alpha, params.bound_mode)?;
    let abstained = certification_counts.top_class() != predicted || bounds.crossed();
    let radius_by_ops = if abstained {
        EditOps::ALL.iter().map(|&ops| (ops, 0)).collect()
    } else {
        radii_for_bounds(&bounds, p_del)?
    };
    let full = radius_by_ops[&EditOps::FULL];
    let cc = lev_ball_cardinality_lower_bound(&CardinalityParams::new(
        x.len() as u64,
        params.vocab_size,
        full as u64,
    ));
    Ok(Certificate {
        predicted,
        abstained,
        p_del,
        alpha: params.alpha,
        bounds,
        radius_by_ops,
        log10_cardinality_lb: log10_biguint(&cc),
        prediction_counts,
        certification_counts,
    })
}
