//! Query-budgeted black-box attacks and their outcome accounting.
//!
//! Each instance is attacked greedily: positions are ranked by how much
//! removing them lowers the true-class score, then perturbed one at a time
//! until the label flips, the query budget runs out, or the wall clock
//! expires. Instances run in parallel; each attack is sequential.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::sample_counts;
use crate::classifier::{argmax_lowest, BaseClassifier, BuiltinModel};
use crate::dataset::LabeledDataset;
use crate::edit_metrics::{edit_distance, EditOps};
use crate::error::{Error, Result};
use crate::mechanisms::MechanismParams;
use crate::par;
use crate::rng::{Domain, SampleStream};
use crate::tokenization::{tokenize, Scheme, TokenSeq};

pub const DEFAULT_MAX_QUERIES: u64 = 10_000;
pub const DEFAULT_TIMEOUT_SECONDS: f64 = 600.0;
pub const DEFAULT_PREDICTION_SAMPLES: u64 = 100;
pub const DEFAULT_CANDIDATES_PER_POSITION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    GreedySubstitute,
    /// Substitutions, insertions and deletions.
    GreedyEdit,
    /// Character swaps, insertions and deletions inside a token.
    CharPerturb,
}

impl FromStr for AttackKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy_substitute" => Ok(Self::GreedySubstitute),
            "greedy_edit" => Ok(Self::GreedyEdit),
            "char_perturb" => Ok(Self::CharPerturb),
            other => Err(Error::invalid(format!("unknown attack kind {other:?}"))),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GreedySubstitute => "greedy_substitute",
            Self::GreedyEdit => "greedy_edit",
            Self::CharPerturb => "char_perturb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackRecipe {
    pub kind: AttackKind,
    pub candidates_per_position: usize,
    pub max_queries: u64,
    pub timeout_seconds: f64,
}

impl AttackRecipe {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            candidates_per_position: DEFAULT_CANDIDATES_PER_POSITION,
            max_queries: DEFAULT_MAX_QUERIES,
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_queries == 0 {
            return Err(Error::invalid("max_queries must be at least 1"));
        }
        if !(self.timeout_seconds > 0.0) {
            return Err(Error::invalid("timeout_seconds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStatus {
    Success,
    Fail,
    Skipped,
    Timeout,
}

impl fmt::Display for AttackStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Success => "success",
            Self::Fail => "fail",
            Self::Skipped => "skipped",
            Self::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub index: usize,
    pub label: usize,
    pub status: AttackStatus,
    pub queries_used: u64,
    pub original_text: String,
    /// Present exactly when `status` is `Success`.
    pub adversarial_text: Option<String>,
    /// Full-ops word-level distance from the original, for successes.
    pub edit_distance_used: Option<usize>,
}

/// A classifier failure that stopped the harness on one instance. Not an
/// attack outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub outcomes: Vec<AttackOutcome>,
    pub harness_errors: Vec<HarnessError>,
    /// Seed the predictor used; re-querying with it reproduces every label.
    pub seed: u64,
}

impl AttackReport {
    pub fn count(&self, status: AttackStatus) -> usize {
        self.outcomes.iter().filter(|o| o.status == status).count()
    }

    pub fn total(&self) -> usize {
        self.outcomes.len()
    }

    pub fn clean_accuracy(&self) -> Result<f64> {
        self.fraction(|s| s != AttackStatus::Skipped)
    }

    pub fn robust_accuracy(&self) -> Result<f64> {
        robust_accuracy(self)
    }

    pub fn mean_queries(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.outcomes.iter().map(|o| o.queries_used as f64).sum::<f64>() / self.total() as f64
    }

    fn fraction(&self, keep: impl Fn(AttackStatus) -> bool) -> Result<f64> {
        if self.outcomes.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self.outcomes.iter().filter(|o| keep(o.status)).count() as f64 / self.total() as f64)
    }
}

/// `(fail + timeout) / total`. Timeouts count as robust, so a slower target
/// is favoured; the raw statuses are kept for other conventions.
pub fn robust_accuracy(report: &AttackReport) -> Result<f64> {
    report.fraction(|s| matches!(s, AttackStatus::Fail | AttackStatus::Timeout))
}

/// Something the attacker can query for per-class scores.
pub trait Predictor: Send + Sync {
    fn num_classes(&self) -> usize;
    fn scores(&self, text: &str) -> Result<Vec<f64>>;

    fn predict(&self, text: &str) -> Result<usize> {
        Ok(argmax_lowest(&self.scores(text)?))
    }
}

/// One-hot scores from a hard-label classifier.
pub struct BasePredictor<C>(pub C);

impl<C: BaseClassifier> Predictor for BasePredictor<C> {
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    fn scores(&self, text: &str) -> Result<Vec<f64>> {
        let label = self.0.classify(text)?;
        let mut s = vec![0.0; self.0.num_classes()];
        *s.get_mut(label)
            .ok_or_else(|| Error::invalid(format!("classifier returned label {label}")))? = 1.0;
        Ok(s)
    }
}

/// Posterior probabilities of the builtin model.
pub struct ModelPredictor<'a>(pub &'a BuiltinModel);

impl Predictor for ModelPredictor<'_> {
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    fn scores(&self, text: &str) -> Result<Vec<f64>> {
        let s = self.0.scores(text);
        let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / z).collect())
    }
}

/// Vote fractions of the smoothed classifier. The draws for a query are
/// seeded by `seed` and a hash of the text, so the same text always gets
/// the same answer.
pub struct SmoothedPredictor<C> {
    pub base: C,
    pub mech: MechanismParams,
    pub samples: u64,
    pub seed: u64,
}

pub fn text_key(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

impl<C: BaseClassifier> Predictor for SmoothedPredictor<C> {
    fn num_classes(&self) -> usize {
        self.base.num_classes()
    }

    fn scores(&self, text: &str) -> Result<Vec<f64>> {
        let x = tokenize(text, Scheme::Whitespace);
        let stream = SampleStream::new(self.seed, Domain::Prediction, text_key(text));
        let est = sample_counts(&self.base, &x, &self.mech, self.samples, stream)?;
        Ok((0..est.counts.len()).map(|c| est.fraction(c)).collect())
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn scores(&self, text: &str) -> Result<Vec<f64>> {
        (**self).scores(text)
    }
}

/// Substitution and insertion candidates per token.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, Vec<String>>,
    fallback: Vec<String>,
}

impl Lexicon {
    /// Every token gets the same candidate list.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        Self {
            entries: HashMap::new(),
            fallback: tokens,
        }
    }

    /// The `k` most frequent training tokens as universal candidates.
    pub fn from_model(model: &BuiltinModel, k: usize) -> Self {
        Self::from_tokens(model.frequent_tokens(k))
    }

    /// Parses `token<TAB>cand1,cand2,...` lines. Blank lines are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (tok, cands) = line.split_once('\t').ok_or_else(|| Error::DataRow {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected token<TAB>candidates".into(),
            })?;
            let cands: Vec<String> = cands
                .split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(String::from)
                .collect();
            entries.insert(tok.trim().to_string(), cands);
        }
        Ok(Self {
            entries,
            fallback: Vec::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Up to `k` candidates for `token`, excluding `token` itself.
    pub fn candidates(&self, token: &str, k: usize) -> Vec<String> {
        self.entries
            .get(token)
            .unwrap_or(&self.fallback)
            .iter()
            .filter(|c| c.as_str() != token)
            .take(k)
            .cloned()
            .collect()
    }

    /// Tokens to insert next to a position: the candidates of its token.
    fn insertions(&self, token: &str, k: usize) -> Vec<String> {
        self.candidates(token, k)
    }
}

enum Query {
    Scores(Vec<f64>),
    Budget,
    Timeout,
}

struct Session<'a, P: ?Sized> {
    predictor: &'a P,
    used: u64,
    max: u64,
    deadline: Instant,
}

impl<P: Predictor + ?Sized> Session<'_, P> {
    fn query(&mut self, text: &str) -> Result<Query> {
        if self.used >= self.max {
            return Ok(Query::Budget);
        }
        if Instant::now() >= self.deadline {
            return Ok(Query::Timeout);
        }
        self.used += 1;
        Ok(Query::Scores(self.predictor.scores(text)?))
    }
}

/// Working copy of a text: each original token (or nothing, if deleted)
/// followed by tokens inserted after it.
#[derive(Clone)]
struct Draft {
    slots: Vec<Option<String>>,
    inserted: Vec<Vec<String>>,
}

impl Draft {
    fn new(tokens: &[String]) -> Self {
        Self {
            slots: tokens.iter().cloned().map(Some).collect(),
            inserted: vec![Vec::new(); tokens.len()],
        }
    }

    fn render(&self) -> String {
        let mut out: Vec<&str> = Vec::new();
        for (slot, ins) in self.slots.iter().zip(&self.inserted) {
            out.extend(slot.as_deref());
            out.extend(ins.iter().map(String::as_str));
        }
        out.join(" ")
    }
}

fn char_variants<R: Rng>(token: &str, k: usize, rng: &mut R) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut out = Vec::new();
    // bounded retries; short tokens admit few distinct variants
    for _ in 0..4 * k.max(1) {
        if out.len() >= k {
            break;
        }
        let mut c = chars.clone();
        match rng.random_range(0..3) {
            0 if c.len() >= 2 => {
                let i = rng.random_range(0..c.len() - 1);
                c.swap(i, i + 1);
            }
            1 if c.len() >= 2 => {
                c.remove(rng.random_range(0..c.len()));
            }
            _ => {
                let ch = char::from(b'a' + rng.random_range(0..26u8));
                c.insert(rng.random_range(0..=c.len()), ch);
            }
        }
        let v: String = c.into_iter().collect();
        if v != token && !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn candidate_drafts<R: Rng>(
    draft: &Draft,
    pos: usize,
    original: &str,
    recipe: &AttackRecipe,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Vec<Draft> {
    let k = recipe.candidates_per_position;
    let mut out = Vec::new();
    let with_slot = |tok: Option<String>| {
        let mut d = draft.clone();
        d.slots[pos] = tok;
        d
    };
    match recipe.kind {
        AttackKind::GreedySubstitute => {
            out.extend(lexicon.candidates(original, k).into_iter().map(|c| with_slot(Some(c))));
        }
        AttackKind::GreedyEdit => {
            out.push(with_slot(None));
            out.extend(lexicon.candidates(original, k).into_iter().map(|c| with_slot(Some(c))));
            for c in lexicon.insertions(original, k) {
                let mut d = draft.clone();
                d.inserted[pos].push(c);
                out.push(d);
            }
        }
        AttackKind::CharPerturb => {
            out.extend(char_variants(original, k, rng).into_iter().map(|c| with_slot(Some(c))));
        }
    }
    out
}

fn finish(
    index: usize,
    label: usize,
    text: &str,
    status: AttackStatus,
    queries_used: u64,
    adversarial: Option<String>,
) -> Result<AttackOutcome> {
    let edit_distance_used = match &adversarial {
        Some(adv) => {
            let a = tokenize(text, Scheme::Whitespace);
            let b = tokenize(adv, Scheme::Whitespace);
            edit_distance(&a, &b, EditOps::FULL)?.finite()
        }
        None => None,
    };
    Ok(AttackOutcome {
        index,
        label,
        status,
        queries_used,
        original_text: text.to_string(),
        adversarial_text: adversarial,
        edit_distance_used,
    })
}

/// Attacks one labelled text.
pub fn attack_instance<P: Predictor + ?Sized>(
    predictor: &P,
    text: &str,
    label: usize,
    index: usize,
    recipe: &AttackRecipe,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<AttackOutcome> {
    recipe.validate()?;
    let mut s = Session {
        predictor,
        used: 0,
        max: recipe.max_queries,
        deadline: Instant::now() + Duration::from_secs_f64(recipe.timeout_seconds),
    };
    let stopped = |s: &Session<P>, q: Query| {
        let status = match q {
            Query::Timeout => AttackStatus::Timeout,
            _ => AttackStatus::Fail,
        };
        finish(index, label, text, status, s.used, None)
    };

    // the clean query always runs so that skips are decided
    s.used += 1;
    let clean = predictor.scores(text)?;
    if argmax_lowest(&clean) != label {
        return finish(index, label, text, AttackStatus::Skipped, s.used, None);
    }
    let tokens: Vec<String> = tokenize(text, Scheme::Whitespace).into_tokens();
    let base = Draft::new(&tokens);

    let mut importance = Vec::with_capacity(tokens.len());
    for pos in 0..tokens.len() {
        let mut d = base.clone();
        d.slots[pos] = None;
        match s.query(&d.render())? {
            Query::Scores(sc) => importance.push((clean[label] - sc[label], pos)),
            q => return stopped(&s, q),
        }
    }
    importance.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let stream = SampleStream::new(seed, Domain::Attack, index as u64);
    let mut draft = base;
    let mut current = clean[label];
    for &(_, pos) in &importance {
        let mut rng = stream.rng(pos as u64);
        let mut best: Option<(f64, Draft)> = None;
        for cand in candidate_drafts(&draft, pos, &tokens[pos], recipe, lexicon, &mut rng) {
            let rendered = cand.render();
            let sc = match s.query(&rendered)? {
                Query::Scores(sc) => sc,
                q => return stopped(&s, q),
            };
            if argmax_lowest(&sc) != label {
                return finish(index, label, text, AttackStatus::Success, s.used, Some(rendered));
            }
            if sc[label] < current && best.as_ref().is_none_or(|(b, _)| sc[label] < *b) {
                best = Some((sc[label], cand));
            }
        }
        if let Some((score, cand)) = best {
            current = score;
            draft = cand;
        }
    }
    finish(index, label, text, AttackStatus::Fail, s.used, None)
}

/// Attacks every instance of `data` in parallel; outcomes are in index order.
pub fn run_attack<P: Predictor + ?Sized>(
    predictor: &P,
    data: &LabeledDataset,
    recipe: &AttackRecipe,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<AttackReport> {
    recipe.validate()?;
    let items = data.items();
    let results = par::map_indexed(items.len(), |i| {
        attack_instance(predictor, &items[i].text, items[i].label, i, recipe, lexicon, seed)
    });
    Ok(collect(results, seed))
}

fn collect(results: Vec<Result<AttackOutcome>>, seed: u64) -> AttackReport {
    let mut outcomes = Vec::new();
    let mut harness_errors = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => harness_errors.push(HarnessError {
                index,
                message: e.to_string(),
            }),
        }
    }
    AttackReport {
        outcomes,
        harness_errors,
        seed,
    }
}

/// Replays the successes of `source` against `target`. The transferred set
/// holds exactly the source successes: skipped if the target already gets
/// the clean text wrong, success if the adversarial text flips it, fail
/// otherwise.
pub fn transfer_attack<P: Predictor + ?Sized>(
    source: &AttackReport,
    target: &P,
    seed: u64,
) -> Result<AttackReport> {
    let successes: Vec<&AttackOutcome> = source
        .outcomes
        .iter()
        .filter(|o| o.status == AttackStatus::Success)
        .collect();
    let results = par::map_indexed(successes.len(), |i| {
        let o = successes[i];
        let adv = o.adversarial_text.as_deref().expect("successes carry text");
        let status = if target.predict(&o.original_text)? != o.label {
            AttackStatus::Skipped
        } else if target.predict(adv)? != o.label {
            AttackStatus::Success
        } else {
            AttackStatus::Fail
        };
        Ok(AttackOutcome {
            index: o.index,
            label: o.label,
            status,
            queries_used: 2,
            original_text: o.original_text.clone(),
            adversarial_text: (status == AttackStatus::Success).then(|| adv.to_string()),
            edit_distance_used: (status == AttackStatus::Success).then_some(o.edit_distance_used).flatten(),
        })
    });
    let mut report = collect(results, seed);
    for e in &mut report.harness_errors {
        e.index = successes[e.index].index;
    }
    Ok(report)
}

/// Word-level distance helper for callers checking outcomes.
pub fn word_distance(a: &str, b: &str) -> Result<usize> {
    let a = TokenSeq::words(&a.split_whitespace().collect::<Vec<_>>());
    let b = TokenSeq::words(&b.split_whitespace().collect::<Vec<_>>());
    Ok(edit_distance(&a, &b, EditOps::FULL)?.finite().expect("full ops are always finite"))
}
