//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every line is printed on
//! each run. Exits nonzero when a criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use editcert::attacks::{
    robust_accuracy, run_attack, transfer_attack, AttackKind, AttackRecipe, AttackStatus, Lexicon,
    Predictor, SmoothedPredictor,
};
use editcert::certify::{
    certified_radius, pairwise_bounds, radius_from_margin, score_bounds, BoundMode,
    CertifyParams, ScoreEstimate, UNBOUNDED_RADIUS,
};
use editcert::classifier::{
    train_builtin, BaseClassifier, KeywordClassifier, RuleClassifier, DEFAULT_SAMPLES_PER_INSTANCE,
};
use editcert::dataset::{synthetic_keyword_dataset, Example, LabeledDataset};
use editcert::edit_metrics::{
    edit_decomposition, enumerate_ball, hamming_ball_cardinality, lev_ball_cardinality_exact,
    lev_ball_cardinality_lower_bound, CardinalityParams, EditOps,
};
use editcert::mechanisms::{pattern_probability, sample_deletion_pattern, DeletionPattern, MechanismParams};
use editcert::oracle::{exact_smoothed_scores, ExactScores, PredictionOracle};
use editcert::rng::{Domain, SampleStream};
use editcert::textcrs::{max_certified_edit_radius, CoverKind};
use editcert::{Scheme, TokenSeq};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

const UNIVERSE: [&str; 3] = ["good", "a", "b"];

/// Every sequence of length 0..=max_len over `UNIVERSE`.
fn universe(max_len: usize) -> Vec<TokenSeq> {
    let mut out = vec![TokenSeq::words::<&str>(&[])];
    let mut frontier = out.clone();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for t in UNIVERSE {
                let mut v = s.tokens().to_vec();
                v.push(t.to_string());
                next.push(TokenSeq::words(&v));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn alphabet() -> Vec<String> {
    UNIVERSE.iter().map(|s| s.to_string()).collect()
}

/// The keyword rule plus a counting rule whose margins are not all extreme.
fn rule_classifiers() -> Vec<(&'static str, Box<dyn BaseClassifier>)> {
    vec![
        ("keyword", Box::new(KeywordClassifier::new("good"))),
        (
            "two-a",
            Box::new(RuleClassifier::new(2, |t: &[&str]| {
                usize::from(t.iter().filter(|&&s| s == "a").count() >= 2)
            })),
        ),
    ]
}

fn ball_radius(r: u32) -> usize {
    if r == UNBOUNDED_RADIUS {
        usize::MAX
    } else {
        r as usize
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let xs = universe(5);
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for (name, f) in rule_classifiers() {
        for p in [0.5, 0.8] {
            let oracle = PredictionOracle::new(f.as_ref(), p);
            for x in &xs {
                let b = exact_smoothed_scores(f.as_ref(), x, p).unwrap().as_bounds();
                for ops in EditOps::ALL {
                    let r = certified_radius(&b, p, ops).unwrap();
                    let bad = oracle.violations(x, ball_radius(r), ops, &alphabet()).unwrap();
                    checked += 1;
                    if let Some(v) = bad.first() {
                        violations.push(format!("{name} p={p} x={x:?} ops={ops} r={r} at {v:?}"));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!("{checked} certificates, {} violations, {secs:.1}s", violations.len());
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    verdict(violations.is_empty() && secs < 600.0, detail)
}

fn criterion_2() -> Verdict {
    let xs = universe(5);
    let mut pairs = 0usize;
    let mut bad = Vec::new();
    for (name, f) in rule_classifiers() {
        for p in [0.5, 0.8] {
            let exact: Vec<ExactScores> = xs
                .iter()
                .map(|x| exact_smoothed_scores(f.as_ref(), x, p).unwrap())
                .collect();
            for (i, x) in xs.iter().enumerate() {
                for (j, xt) in xs.iter().enumerate() {
                    // operations turning x̃ into x
                    let dec = edit_decomposition(xt, x).unwrap();
                    if dec.distance > 3 {
                        continue;
                    }
                    pairs += 1;
                    for y in 0..f.num_classes() {
                        let (lo, hi) = pairwise_bounds(exact[i].probs[y], &dec, p);
                        let v = exact[j].probs[y];
                        if v < lo - 1e-9 || v > hi + 1e-9 {
                            bad.push(format!("{name} p={p} x={x:?} x~={xt:?} y={y}: {v} not in [{lo}, {hi}]"));
                        }
                    }
                }
            }
        }
    }
    let mut detail = format!("{pairs} pairs, {} violations", bad.len());
    if let Some(v) = bad.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    verdict(bad.is_empty(), detail)
}

fn criterion_3() -> Verdict {
    let mut failures = Vec::new();
    let mut cells = 0;
    for p in [0.3, 0.5, 0.8, 0.9, 0.99] {
        for i in 0..=20 {
            for j in 0..=i {
                let (mu_y, mu_yp) = (i as f64 / 20.0, j as f64 / 20.0);
                let r = |ops| radius_from_margin(mu_y, mu_yp, p, ops).unwrap();
                let full = r(EditOps::FULL);
                cells += 1;
                let ok = r(EditOps::SUB) == full
                    && r(EditOps::DEL) == r(EditOps::DEL_INS)
                    && r(EditOps::DEL) >= full
                    && r(EditOps::INS) >= full
                    && (i != j || EditOps::ALL.iter().all(|&o| r(o) == 0));
                if !ok {
                    failures.push(format!("p={p} mu=({mu_y}, {mu_yp})"));
                }
            }
        }
    }
    verdict(failures.is_empty(), format!("{cells} grid cells over 5 rates, {} failures{}", failures.len(), failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()))
}

fn criterion_4() -> Verdict {
    let (trials, n, p_true, alpha) = (1000u64, 4000u64, 0.7, 0.05);
    let mut failures = 0;
    for t in 0..trials {
        let mut rng = SampleStream::new(2024, Domain::Simulation, t).rng(0);
        let k = (0..n).filter(|_| rng.random_bool(p_true)).count() as u64;
        let est = ScoreEstimate::new(vec![k, n - k]).unwrap();
        let b = score_bounds(&est, alpha, BoundMode::BonferroniCp).unwrap();
        let (true_top, true_runner) = if b.top_class == 0 { (p_true, 1.0 - p_true) } else { (1.0 - p_true, p_true) };
        if b.mu_y > true_top || b.mu_yprime < true_runner {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    verdict(rate <= alpha + 0.02, format!("joint failure rate {rate:.3} over {trials} trials (limit {:.2})", alpha + 0.02))
}

fn criterion_5() -> Verdict {
    let mut cases = 0;
    let mut bad = Vec::new();
    for v in 1..=3u64 {
        let alpha: Vec<String> = (0..v).map(|i| format!("t{i}")).collect();
        for n in 0..=4usize {
            // every x of length n over the v-token vocabulary
            let total = v.pow(n as u32);
            for code in 0..total {
                let x: Vec<String> = (0..n)
                    .map(|i| alpha[((code / v.pow(i as u32)) % v) as usize].clone())
                    .collect();
                let x = TokenSeq::words(&x);
                for r in 0..=2usize {
                    cases += 1;
                    let p = CardinalityParams::new(n as u64, v, r as u64);
                    let lower = lev_ball_cardinality_lower_bound(&p);
                    let exact = lev_ball_cardinality_exact(&x, v, r).unwrap();
                    let enumerated = enumerate_ball(&x, r, EditOps::FULL, &alpha).unwrap().len();
                    if exact != enumerated.into() {
                        bad.push(format!("automaton {exact} != enumeration {enumerated} at x={x:?} v={v} r={r}"));
                    }
                    if lower > exact {
                        bad.push(format!("lower {lower} > exact {exact} at x={x:?} v={v} r={r}"));
                    }
                    if r <= n {
                        let brute = (0..total)
                            .filter(|&c| {
                                (0..n)
                                    .filter(|&i| (c / v.pow(i as u32)) % v != (code / v.pow(i as u32)) % v)
                                    .count()
                                    <= r
                            })
                            .count();
                        let hamming = hamming_ball_cardinality(&p).unwrap();
                        if hamming != brute.into() {
                            bad.push(format!("hamming {hamming} != brute {brute} at n={n} v={v} r={r}"));
                        }
                        if hamming > lower {
                            bad.push(format!("hamming {hamming} > lower {lower} at n={n} v={v} r={r}"));
                        }
                    }
                }
            }
        }
    }
    verdict(bad.is_empty(), format!("{cases} (x, v, r) cases, {} mismatches{}", bad.len(), bad.first().map(|f| format!("; first: {f}")).unwrap_or_default()))
}

fn criterion_6() -> Verdict {
    let (n, p, draws) = (4usize, 0.9, 100_000u64);
    let mut counts = BTreeMap::<u64, u64>::new();
    let mut kept_sum = 0u64;
    let stream = SampleStream::new(6, Domain::Simulation, 0);
    for i in 0..draws {
        let pat = sample_deletion_pattern(n, p, &mut stream.rng(i));
        kept_sum += (n - pat.popcount()) as u64;
        let idx = pat.bits().iter().enumerate().map(|(b, &on)| u64::from(on) << b).sum();
        *counts.entry(idx).or_default() += 1;
    }
    let mut chi2 = 0.0;
    for idx in 0..1u64 << n {
        let pat = DeletionPattern::from_index(n, idx);
        let expected = pattern_probability(&pat, p) * draws as f64;
        let seen = *counts.get(&idx).unwrap_or(&0) as f64;
        chi2 += (seen - expected).powi(2) / expected;
    }
    let critical = ChiSquared::new(((1 << n) - 1) as f64).unwrap().inverse_cdf(0.99);
    let mean = kept_sum as f64 / draws as f64;
    let want = n as f64 * (1.0 - p);
    let sigma = (n as f64 * p * (1.0 - p) / draws as f64).sqrt();
    verdict(
        chi2 < critical && (mean - want).abs() <= 3.0 * sigma,
        format!("chi2 {chi2:.2} < {critical:.2}; kept mean {mean:.4} vs {want:.4} (3 sigma {:.4})", 3.0 * sigma),
    )
}

fn criterion_7() -> Verdict {
    let del = |n: usize| max_certified_edit_radius(n, CoverKind::Deletion, n as f64, None, 1.0).unwrap();
    let mut ok = (3..100).all(|n| del(n) == 0) && del(1) == 1 && del(2) == 2;
    for n in 1..100 {
        for ratio in [0.0, 0.25, 0.5, 0.75, 0.999] {
            for cap in [n as f64, f64::INFINITY] {
                let r = max_certified_edit_radius(n, CoverKind::Insertion, cap, Some(ratio * 2.0), 2.0).unwrap();
                ok &= r == 0;
            }
        }
    }
    verdict(ok, "deletion: 0 for n in 3..100, n for n in {1, 2}; insertion: 0 whenever r_I_cap/d_star < 1")
}

fn criterion_8() -> (Verdict, Verdict) {
    let start = Instant::now();
    let train = synthetic_keyword_dataset(2000, 80);
    let test = synthetic_keyword_dataset(500, 81);
    let mech = MechanismParams::deletion(0.9).unwrap();
    let model = train_builtin(&train, &mech, DEFAULT_SAMPLES_PER_INSTANCE, 8).unwrap();
    let params = CertifyParams::default();
    let records = editcert::report::certify_dataset(&model, &test, &mech, &params, 8, Scheme::Whitespace).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let acc = records.iter().filter(|r| r.correct()).count() as f64 / records.len() as f64;

    let high: Vec<_> = records.iter().filter(|r| !r.abstained && r.mu_y - r.mu_yprime >= 0.9).collect();
    let fives = high.iter().filter(|r| r.radius(EditOps::FULL) == 5).count();
    let sixes = high.iter().filter(|r| r.radius(EditOps::FULL) == 6).count();
    let literal = verdict(
        acc >= 0.95 && fives == high.len() && secs < 300.0,
        format!(
            "clean accuracy {acc:.3}; {} instances with margin >= 0.9: {fives} at radius 5, {sixes} at radius 6; {secs:.1}s",
            high.len()
        ),
    );

    // Radius 5 holds on [0.9, 2 - 2*0.9^6); at or above that edge the
    // formula gives 6. Check each instance against its exact floor.
    let edge = 2.0 - 2.0 * 0.9f64.powi(6);
    let mut mismatched = 0;
    for r in &high {
        let m = r.mu_y - r.mu_yprime;
        let want = if m < edge { 5 } else { 6 };
        if r.radius(EditOps::FULL) != want {
            mismatched += 1;
        }
    }
    // margin exactly 0.9 sits at t = 0.55, strictly between 0.9^6 and 0.9^5
    let at_point_nine = radius_from_margin(0.95, 0.05, 0.9, EditOps::FULL).unwrap();
    let consistent = verdict(
        acc >= 0.95 && mismatched == 0 && at_point_nine == 5 && secs < 300.0,
        format!(
            "margin 0.9 gives {at_point_nine}; radius 5 below margin {edge:.5}, 6 at or above it: {mismatched} mismatches"
        ),
    );
    (literal, consistent)
}

/// Keyword rule that stalls on texts containing "slow".
struct SlowKeyword(KeywordClassifier);

impl BaseClassifier for SlowKeyword {
    fn num_classes(&self) -> usize {
        2
    }

    fn classify_batch(&self, texts: &[String]) -> editcert::Result<Vec<usize>> {
        if texts.iter().any(|t| t.split_whitespace().any(|w| w == "slow")) {
            std::thread::sleep(Duration::from_millis(150));
        }
        self.0.classify_batch(texts)
    }
}

fn criterion_9() -> Verdict {
    // 25 flippable (marker present), 25 unflippable (no marker, lexicon lacks
    // it), 25 mislabelled, 25 slow enough to time out
    let mut items = Vec::new();
    for i in 0..100 {
        let (text, label) = match i % 4 {
            0 => (format!("w{i} good film"), 1),
            1 => (format!("w{i} plain film"), 0),
            2 => (format!("w{i} plain film"), 1),
            _ => (format!("w{i} slow good film"), 1),
        };
        items.push(Example::new(text, label));
    }
    let data = LabeledDataset::new(items, 2).unwrap();
    let seed = 99;
    let target = SmoothedPredictor {
        base: SlowKeyword(KeywordClassifier::new("good")),
        mech: MechanismParams::deletion(0.05).unwrap(),
        samples: 100,
        seed,
    };
    let recipe = AttackRecipe {
        timeout_seconds: 0.5,
        ..AttackRecipe::new(AttackKind::GreedyEdit)
    };
    let lexicon = Lexicon::from_tokens(vec!["film".into(), "plain".into()]);
    let report = run_attack(&target, &data, &recipe, &lexicon, seed).unwrap();
    let c = |s| report.count(s);
    let (s, f, k, t) = (c(AttackStatus::Success), c(AttackStatus::Fail), c(AttackStatus::Skipped), c(AttackStatus::Timeout));
    let mut ok = report.harness_errors.is_empty() && s + f + k + t == 100;
    ok &= robust_accuracy(&report).unwrap() == (f + t) as f64 / 100.0;
    ok &= report.outcomes.iter().all(|o| o.queries_used <= recipe.max_queries);

    // re-query every success with the stored seed on a fresh predictor
    let requery = SmoothedPredictor {
        base: KeywordClassifier::new("good"),
        mech: MechanismParams::deletion(0.05).unwrap(),
        samples: 100,
        seed: report.seed,
    };
    let mut flips = 0;
    for o in report.outcomes.iter().filter(|o| o.status == AttackStatus::Success) {
        if requery.predict(o.adversarial_text.as_ref().unwrap()).unwrap() != o.label {
            flips += 1;
        }
    }
    ok &= flips == s;

    let transfer = transfer_attack(&report, &target, seed).unwrap();
    ok &= transfer.total() == s && transfer.robust_accuracy().map(|r| r == 0.0).unwrap_or(s == 0);
    ok &= s > 0 && f > 0 && k > 0 && t > 0;
    verdict(
        ok,
        format!(
            "success {s}, fail {f}, skipped {k}, timeout {t}; {flips}/{s} successes re-flip; transfer to self: {} replays, robust {:?}",
            transfer.total(),
            transfer.robust_accuracy().ok()
        ),
    )
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let test = dir.path().join("test.jsonl");
    synthetic_keyword_dataset(400, 100).write_jsonl(&train).unwrap();
    synthetic_keyword_dataset(40, 101).write_jsonl(&test).unwrap();
    let model = dir.path().join("model.json");
    let path = |p: &std::path::Path| p.to_str().unwrap().to_string();
    let run = |args: &[String]| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = editcert_cli::run(std::iter::once("editcert".to_string()).chain(args.iter().cloned()), &mut out, &mut err);
        assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
        out
    };
    run(&["train".into(), "--data".into(), path(&train), "--model".into(), path(&model), "--seed".into(), "3".into()]);
    let certify_args: Vec<String> =
        ["certify", "--data", &path(&test), "--model", &path(&model), "--seed", "11"].map(String::from).to_vec();
    let pool = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4).max(2);
    let a = pool(threads).install(|| run(&certify_args));
    let b = pool(threads).install(|| run(&certify_args));
    let single = pool(1).install(|| run(&certify_args));
    let rows = a.iter().filter(|&&c| c == b'\n').count() - 1;
    verdict(
        a == b && a == single && rows == 40,
        format!("{rows} records; repeat identical: {}; 1 vs {threads} threads identical: {}", a == b, a == single),
    )
}

/// Clauses that a correct implementation cannot satisfy. They are still run
/// and printed as FAIL; they do not set the exit status.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "8",
    "margins at or above 2 - 2*0.9^6 = 0.93712 certify radius 6, not 5; 8b checks the exact floor instead",
)];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    let mut report = |id: &str, name: &str, v: Verdict| {
        println!("criterion {id} [{name}]: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed.push(id.to_string());
        }
    };
    report("1", "certificate soundness, exhaustive", criterion_1());
    report("2", "pairwise score bounds, exhaustive", criterion_2());
    report("3", "radius structure across op sets", criterion_3());
    report("4", "confidence coverage", criterion_4());
    report("5", "cardinality oracles", criterion_5());
    report("6", "deletion pattern distribution", criterion_6());
    report("7", "permutation-certificate vacuity", criterion_7());
    let (literal, consistent) = criterion_8();
    report("8", "end-to-end desk run, margin >= 0.9 gets radius exactly 5", literal);
    report("8b", "end-to-end desk run, radius equals the exact floor", consistent);
    report("9", "attack protocol accounting", criterion_9());
    report("10", "reproducibility across runs and thread counts", criterion_10());
    let (known, blocking): (Vec<_>, Vec<_>) =
        failed.iter().partition(|id| KNOWN_UNATTAINABLE.iter().any(|(k, _)| k == id));
    for id in &known {
        let why = KNOWN_UNATTAINABLE.iter().find(|(k, _)| k == id).unwrap().1;
        println!("criterion {id}: known unattainable: {why}");
    }
    println!("acceptance: {} failing {:?}, of which {} known unattainable", failed.len(), failed, known.len());
    if blocking.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
