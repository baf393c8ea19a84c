//! Smoothing noise: token deletion, and token masking as a baseline.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenization::TokenSeq;

pub const DEFAULT_MASK_TOKEN: &str = "[MASK]";

/// Deletion indicators `ε`: bit `i` set means token `i` is deleted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeletionPattern {
    bits: Vec<bool>,
}

impl DeletionPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Self::new(vec![true; n])
    }

    /// Pattern whose bit `i` is bit `i` of `index`. Enumerating
    /// `0..2^n` visits every pattern once.
    pub fn from_index(n: usize, index: u64) -> Self {
        debug_assert!(n < 64);
        Self::new((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of deleted tokens.
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `self ⊑ other`: every token deleted by `self` is deleted by `other`.
    pub fn is_below(&self, other: &DeletionPattern) -> bool {
        self.len() == other.len() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Display for DeletionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} {p} is not a probability")))
    }
}

/// Draws `ε_i ~ Bernoulli(p_del)` independently for `n` tokens.
pub fn sample_deletion_pattern<R: Rng + ?Sized>(n: usize, p_del: f64, rng: &mut R) -> DeletionPattern {
    assert!((0.0..=1.0).contains(&p_del), "p_del must be a probability");
    DeletionPattern::new((0..n).map(|_| rng.random_bool(p_del)).collect())
}

/// `q(ε) = Π p^{ε_i} (1 − p)^{1 − ε_i}`.
pub fn pattern_probability(pat: &DeletionPattern, p_del: f64) -> f64 {
    let k = pat.popcount() as i32;
    let n = pat.len() as i32;
    p_del.powi(k) * (1.0 - p_del).powi(n - k)
}

/// Removes the tokens flagged in `pat`, keeping the rest in order.
pub fn apply_deletion(x: &TokenSeq, pat: &DeletionPattern) -> Result<TokenSeq> {
    if pat.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: pat.len(),
        });
    }
    let kept = x
        .tokens()
        .iter()
        .zip(pat.bits())
        .filter(|(_, &del)| !del)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(TokenSeq::from_parts_unchecked(kept, x.scheme()))
}

/// Replaces a uniformly random set of exactly `round(p_mask · n)` positions
/// with `mask_token`.
pub fn sample_masking<R: Rng + ?Sized>(
    x: &TokenSeq,
    p_mask: f64,
    mask_token: &str,
    rng: &mut R,
) -> TokenSeq {
    assert!((0.0..=1.0).contains(&p_mask), "p_mask must be a probability");
    let n = x.len();
    let k = ((p_mask * n as f64).round() as usize).min(n);
    let mut tokens = x.tokens().to_vec();
    for i in rand::seq::index::sample(rng, n, k) {
        tokens[i] = mask_token.to_owned();
    }
    TokenSeq::from_parts_unchecked(tokens, x.scheme())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Deletion,
    Masking,
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MechanismKind::Deletion => "deletion",
            MechanismKind::Masking => "masking",
        })
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "deletion" => Ok(MechanismKind::Deletion),
            "masking" => Ok(MechanismKind::Masking),
            other => Err(Error::invalid(format!("unknown mechanism {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    pub kind: MechanismKind,
    /// `p_del` or `p_mask`.
    pub rate: f64,
    pub mask_token: String,
}

impl MechanismParams {
    pub fn new(kind: MechanismKind, rate: f64) -> Result<Self> {
        check_probability(rate, "rate")?;
        Ok(Self {
            kind,
            rate,
            mask_token: DEFAULT_MASK_TOKEN.to_owned(),
        })
    }

    pub fn deletion(p_del: f64) -> Result<Self> {
        Self::new(MechanismKind::Deletion, p_del)
    }

    pub fn masking(p_mask: f64) -> Result<Self> {
        Self::new(MechanismKind::Masking, p_mask)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(self.rate, "rate")
    }

    /// One random perturbation of `x`.
    pub fn perturb<R: Rng + ?Sized>(&self, x: &TokenSeq, rng: &mut R) -> TokenSeq {
        match self.kind {
            MechanismKind::Deletion => {
                let pat = sample_deletion_pattern(x.len(), self.rate, rng);
                apply_deletion(x, &pat).expect("pattern sized to x")
            }
            MechanismKind::Masking => sample_masking(x, self.rate, &self.mask_token, rng),
        }
    }
}
