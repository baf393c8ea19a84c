//! Brute-force ground truth at desk scale.
//!
//! Smoothed scores are computed exactly by enumerating all `2^n` deletion
//! patterns, and certificates are checked by evaluating the exact smoothed
//! prediction at every point of the edit ball.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::certify::ScoreBounds;
use crate::classifier::{argmax_lowest, BaseClassifier};
use crate::edit_metrics::{enumerate_ball, EditOps};
use crate::error::{Error, Result};
use crate::mechanisms::{apply_deletion, pattern_probability, DeletionPattern};
use crate::par;
use crate::tokenization::{detokenize, TokenSeq};

/// Longest input `exact_smoothed_scores` enumerates.
pub const EXACT_MAX_TOKENS: usize = 18;
/// Longest input the exact rational variant accepts.
pub const RATIONAL_MAX_TOKENS: usize = 12;
/// Score gaps below this are re-decided in rational arithmetic.
const NEAR_TIE: f64 = 1e-9;
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactScores {
    pub probs: Vec<f64>,
    pub n: usize,
}

impl ExactScores {
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.probs)
    }

    /// The exact scores as zero-width bounds: `μ_y = p_y`, `μ_y' = p_y'`.
    pub fn as_bounds(&self) -> ScoreBounds {
        let top = self.argmax();
        let runner_up = (0..self.probs.len())
            .filter(|&c| c != top)
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if self.probs[b] >= self.probs[c] => Some(b),
                _ => Some(c),
            })
            .expect("at least two classes");
        ScoreBounds {
            top_class: top,
            runner_up,
            mu_y: self.probs[top],
            mu_yprime: self.probs[runner_up],
            alpha: 0.0,
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn merge(&mut self, other: Kahan) {
        self.add(other.sum);
        self.add(-other.c);
    }
}

fn perturbed_texts(x: &TokenSeq, range: std::ops::Range<u64>) -> Vec<(DeletionPattern, String)> {
    range
        .map(|i| {
            let pat = DeletionPattern::from_index(x.len(), i);
            let text = detokenize(&apply_deletion(x, &pat).expect("pattern sized to x"));
            (pat, text)
        })
        .collect()
}

/// `p_y(x) = Σ_ε q(ε)·1[f̄(apply(x, ε)) = y]` for every class.
pub fn exact_smoothed_scores<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    p_del: f64,
) -> Result<ExactScores> {
    if x.len() > EXACT_MAX_TOKENS {
        return Err(Error::ScaleGuard(format!(
            "exact scores need 2^{} patterns, limit is 2^{EXACT_MAX_TOKENS}",
            x.len()
        )));
    }
    let k = f.num_classes();
    let total = 1u64 << x.len();
    let chunks = total.div_ceil(CHUNK) as usize;
    let partial = par::try_map_indexed(chunks, |c| {
        let start = c as u64 * CHUNK;
        let items = perturbed_texts(x, start..(start + CHUNK).min(total));
        let texts: Vec<String> = items.iter().map(|(_, t)| t.clone()).collect();
        let labels = f.classify_batch(&texts)?;
        let mut acc = vec![Kahan::default(); k];
        for ((pat, _), label) in items.iter().zip(labels) {
            acc[label].add(pattern_probability(pat, p_del));
        }
        Ok::<_, Error>(acc)
    })?;
    let mut acc = vec![Kahan::default(); k];
    for part in partial {
        for (a, p) in acc.iter_mut().zip(part) {
            a.merge(p);
        }
    }
    Ok(ExactScores {
        probs: acc.into_iter().map(|a| a.sum).collect(),
        n: x.len(),
    })
}

/// Exact rational scores, with `p_del` taken at its exact binary value.
pub fn exact_smoothed_scores_rational<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    p_del: f64,
) -> Result<Vec<BigRational>> {
    if x.len() > RATIONAL_MAX_TOKENS {
        return Err(Error::ScaleGuard(format!(
            "rational scores limited to {RATIONAL_MAX_TOKENS} tokens, got {}",
            x.len()
        )));
    }
    let p = BigRational::from_float(p_del).ok_or_else(|| Error::invalid("p_del must be finite"))?;
    let q = BigRational::one() - &p;
    let n = x.len() as i32;
    let items = perturbed_texts(x, 0..1u64 << x.len());
    let texts: Vec<String> = items.iter().map(|(_, t)| t.clone()).collect();
    let labels = f.classify_batch(&texts)?;
    let mut probs = vec![BigRational::zero(); f.num_classes()];
    for ((pat, _), label) in items.iter().zip(labels) {
        let d = pat.popcount() as i32;
        probs[label] += p.pow(d) * q.pow(n - d);
    }
    Ok(probs)
}

/// Exact smoothed prediction with near ties settled in rational arithmetic.
pub fn exact_smoothed_prediction<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    p_del: f64,
) -> Result<usize> {
    let scores = exact_smoothed_scores(f, x, p_del)?;
    let b = scores.as_bounds();
    if b.mu_y - b.mu_yprime >= NEAR_TIE || x.len() > RATIONAL_MAX_TOKENS {
        return Ok(b.top_class);
    }
    let exact = exact_smoothed_scores_rational(f, x, p_del)?;
    let mut best = 0;
    for (i, v) in exact.iter().enumerate().skip(1) {
        if *v > exact[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Deletion patterns aligning `a` (the perturbed text x̃) and `b` (the
/// original x) onto a common longest common subsequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentWitness {
    /// Deletes the non-LCS tokens of `a`.
    pub eps_star_src: DeletionPattern,
    /// Deletes the non-LCS tokens of `b`.
    pub eps_star_dst: DeletionPattern,
    pub common: TokenSeq,
}

pub fn alignment_witness(a: &TokenSeq, b: &TokenSeq) -> Result<AlignmentWitness> {
    if a.scheme() != b.scheme() {
        return Err(Error::SchemeMismatch);
    }
    let (x, y) = (a.tokens(), b.tokens());
    let (n, m) = (x.len(), y.len());
    let w = m + 1;
    let mut lcs = vec![0usize; (n + 1) * w];
    for i in 1..=n {
        for j in 1..=m {
            lcs[i * w + j] = if x[i - 1] == y[j - 1] {
                lcs[(i - 1) * w + j - 1] + 1
            } else {
                lcs[(i - 1) * w + j].max(lcs[i * w + j - 1])
            };
        }
    }
    let mut src = vec![true; n];
    let mut dst = vec![true; m];
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if x[i - 1] == y[j - 1] && lcs[i * w + j] == lcs[(i - 1) * w + j - 1] + 1 {
            src[i - 1] = false;
            dst[j - 1] = false;
            i -= 1;
            j -= 1;
        } else if lcs[(i - 1) * w + j] >= lcs[i * w + j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    let eps_star_src = DeletionPattern::new(src);
    let eps_star_dst = DeletionPattern::new(dst);
    let common = apply_deletion(a, &eps_star_src)?;
    Ok(AlignmentWitness {
        eps_star_src,
        eps_star_dst,
        common,
    })
}

/// Memoized exact smoothed predictions for one classifier and deletion rate.
pub struct PredictionOracle<'a, C: ?Sized> {
    f: &'a C,
    p_del: f64,
    cache: Mutex<HashMap<TokenSeq, usize>>,
}

impl<'a, C: BaseClassifier + ?Sized> PredictionOracle<'a, C> {
    pub fn new(f: &'a C, p_del: f64) -> Self {
        Self {
            f,
            p_del,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn predict(&self, x: &TokenSeq) -> Result<usize> {
        if let Some(&y) = self.cache.lock().expect("cache lock").get(x) {
            return Ok(y);
        }
        let y = exact_smoothed_prediction(self.f, x, self.p_del)?;
        self.cache.lock().expect("cache lock").insert(x.clone(), y);
        Ok(y)
    }

    /// Every `x̃` in the `ops`-ball of radius `radius` around `x` whose exact
    /// smoothed prediction differs from the one at `x`.
    pub fn violations(
        &self,
        x: &TokenSeq,
        radius: usize,
        ops: EditOps,
        alphabet: &[String],
    ) -> Result<Vec<TokenSeq>> {
        if radius == 0 {
            return Ok(Vec::new());
        }
        let y = self.predict(x)?;
        let ball = enumerate_ball(x, radius, ops, alphabet)?;
        let preds = par::try_map_indexed(ball.len(), |i| self.predict(&ball[i]))?;
        Ok(ball
            .into_iter()
            .zip(preds)
            .filter(|(_, p)| *p != y)
            .map(|(s, _)| s)
            .collect())
    }
}

/// Every point of the certified ball where the exact smoothed prediction
/// changes. Empty means the certificate holds.
pub fn verify_certificate<C: BaseClassifier + ?Sized>(
    f: &C,
    x: &TokenSeq,
    radius: usize,
    ops: EditOps,
    alphabet: &[String],
    p_del: f64,
) -> Result<Vec<TokenSeq>> {
    PredictionOracle::new(f, p_del).violations(x, radius, ops, alphabet)
}

/// Exact rational `p_del` raised to an integer power, for tests that need
/// exact reference values.
pub fn rational_pow(p_del: f64, exp: i32) -> BigRational {
    let p = BigRational::from_float(p_del).expect("finite");
    if exp >= 0 {
        p.pow(exp)
    } else {
        BigRational::from_integer(BigInt::one()) / p.pow(-exp)
    }
}
