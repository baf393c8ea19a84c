use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use editcert::attacks::{
    run_attack, transfer_attack, AttackKind, AttackRecipe, AttackReport, AttackStatus,
    BasePredictor, Lexicon, ModelPredictor, Predictor, SmoothedPredictor,
};
use editcert::certify::smoothed_predict;
use editcert::classifier::{train_builtin, BaseClassifier, BuiltinModel, ExternalClassifier};
use editcert::dataset::LabeledDataset;
use editcert::edit_metrics::{
    hamming_ball_cardinality, lev_ball_cardinality_exact, lev_ball_cardinality_lower_bound,
    log10_biguint, CardinalityParams,
};
use editcert::mechanisms::{MechanismKind, MechanismParams};
use editcert::report::{certify_dataset, curve, default_thresholds, load_records, records_to_csv, summarize};
use editcert::rng::{Domain, SampleStream};
use editcert::textcrs::{deletion_cover_radii, max_certified_edit_radius, CoverKind};
use editcert::tokenize;

use crate::config::{Common, RunConfig, DEFAULT_RATE};
use crate::Usage;

#[derive(Parser, Debug)]
#[command(name = "editcert", version, about = "Edit-distance robustness certificates by randomized deletion")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train the builtin classifier on perturbed copies of a dataset
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = editcert::classifier::DEFAULT_SAMPLES_PER_INSTANCE)]
        samples_per_instance: usize,
    },
    /// Certify every instance of a dataset; records go to --out as CSV
    Certify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smoothed predictions with vote counts
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, conflicts_with = "text")]
        data: Option<PathBuf>,
        #[arg(long)]
        text: Option<String>,
    },
    /// Certified accuracy against log10 certified cardinality
    Curve {
        #[arg(long)]
        records: PathBuf,
        /// Comma-separated thresholds; defaults to an even grid
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Sizes of Hamming and Levenshtein balls
    Cardinality {
        #[arg(long)]
        length: Option<u64>,
        /// Text whose exact Levenshtein ball is counted
        #[arg(long)]
        text: Option<String>,
        #[arg(long)]
        radius: u64,
        /// hamming, lev-lower, lev-exact or all
        #[arg(long, default_value = "all")]
        kind: String,
    },
    /// Largest edit radius a permutation/embedding certificate can cover
    Textcrs {
        /// Single length; overrides --max-n
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100)]
        max_n: usize,
        #[arg(long, default_value = "deletion")]
        kind: String,
        /// Permutation radius cap; defaults to n
        #[arg(long)]
        r_r_cap: Option<f64>,
        #[arg(long)]
        r_i_cap: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        d_star: f64,
    },
    /// Attack a classifier directly; the report goes to --out as JSON
    Attack {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "greedy_edit")]
        recipe: String,
        #[arg(long, default_value_t = editcert::attacks::DEFAULT_CANDIDATES_PER_POSITION)]
        candidates: usize,
        /// `token<TAB>cand1,cand2` lines; defaults to frequent model tokens
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        lexicon_top_k: usize,
        /// smoothed or base
        #[arg(long, default_value = "smoothed")]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the successes of an attack report against another target
    Transfer {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "smoothed")]
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Loaded {
    Builtin(BuiltinModel),
    External(ExternalClassifier),
}

impl BaseClassifier for Loaded {
    fn num_classes(&self) -> usize {
        match self {
            Loaded::Builtin(m) => m.num_classes(),
            Loaded::External(e) => e.num_classes(),
        }
    }

    fn classify_batch(&self, texts: &[String]) -> editcert::Result<Vec<usize>> {
        match self {
            Loaded::Builtin(m) => m.classify_batch(texts),
            Loaded::External(e) => e.classify_batch(texts),
        }
    }
}

impl Loaded {
    fn open(model: Option<&Path>, cfg: &RunConfig) -> Result<Self> {
        match (model, &cfg.external_cmd) {
            (Some(_), Some(_)) => bail!(Usage("give either --model or --external-cmd, not both".into())),
            (Some(p), None) => Ok(Loaded::Builtin(BuiltinModel::load(p)?)),
            (None, Some(cmd)) => Ok(Loaded::External(ExternalClassifier::spawn(
                cmd,
                cfg.pool_size,
                cfg.num_classes,
                Duration::from_secs_f64(cfg.timeout_seconds),
            )?)),
            (None, None) => bail!(Usage("a classifier is required: --model or --external-cmd".into())),
        }
    }

    /// Flag/config rate, else the model's training rate, else the default.
    fn mechanism(&self, cfg: &RunConfig) -> Result<MechanismParams> {
        let rate = cfg.rate.unwrap_or(match self {
            Loaded::Builtin(m) if m.mechanism().kind == cfg.mechanism => m.mechanism().rate,
            _ => DEFAULT_RATE,
        });
        Ok(MechanismParams::new(cfg.mechanism, rate)?)
    }
}

fn emit(path: Option<&Path>, content: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| editcert::Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => out.write_all(content.as_bytes())?,
    }
    Ok(())
}

pub fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = cli.common.resolve()?;
    match cli.command {
        Command::Train {
            data,
            model,
            samples_per_instance,
        } => {
            let ds = LabeledDataset::load(&data)?;
            let mech = MechanismParams::new(cfg.mechanism, cfg.rate.unwrap_or(DEFAULT_RATE))?;
            let m = train_builtin(&ds, &mech, samples_per_instance, cfg.seed)?;
            m.save(&model)?;
            writeln!(
                err,
                "trained on {} examples, {} tokens; wrote {}",
                ds.len(),
                m.vocabulary().len(),
                model.display()
            )?;
        }
        Command::Certify { data, model, out: path } => {
            let f = Loaded::open(model.as_deref(), &cfg)?;
            let mech = f.mechanism(&cfg)?;
            if mech.kind != MechanismKind::Deletion {
                bail!(Usage("certification requires --mechanism deletion".into()));
            }
            let ds = LabeledDataset::load(&data)?;
            let records = certify_dataset(&f, &ds, &mech, &cfg.certify_params(), cfg.seed, cfg.scheme)?;
            emit(path.as_deref(), &records_to_csv(&records)?, out)?;
            let s = summarize(&records, cfg.ops)?;
            writeln!(err, "instances\t{}", s.instances)?;
            writeln!(err, "clean_accuracy\t{}", s.clean_accuracy)?;
            writeln!(err, "abstain_rate\t{}", s.abstain_rate)?;
            writeln!(err, "median_radius_{}\t{}", s.ops.code(), s.median_radius)?;
            writeln!(err, "median_log10_cc\t{}", s.median_log10_cc)?;
        }
        Command::Predict { model, data, text } => {
            let f = Loaded::open(model.as_deref(), &cfg)?;
            let mech = f.mechanism(&cfg)?;
            let texts: Vec<String> = match (data, text) {
                (Some(p), None) => LabeledDataset::load(&p)?.items().iter().map(|e| e.text.clone()).collect(),
                (None, Some(t)) => vec![t],
                _ => bail!(Usage("give --data or --text".into())),
            };
            let k = f.num_classes();
            let mut csv = String::from("id,predicted");
            for c in 0..k {
                csv.push_str(&format!(",votes_{c}"));
            }
            csv.push('\n');
            for (i, t) in texts.iter().enumerate() {
                let x = tokenize(t, cfg.scheme);
                let stream = SampleStream::new(cfg.seed, Domain::Prediction, i as u64);
                let (y, est) = smoothed_predict(&f, &x, &mech, cfg.n_pred, stream)?;
                csv.push_str(&format!("{i},{y}"));
                for c in &est.counts {
                    csv.push_str(&format!(",{c}"));
                }
                csv.push('\n');
            }
            out.write_all(csv.as_bytes())?;
        }
        Command::Curve {
            records,
            thresholds,
            points,
        } => {
            let recs = load_records(&records)?;
            let grid = if thresholds.is_empty() {
                default_thresholds(&recs, points)
            } else {
                thresholds
            };
            writeln!(out, "log10_cc,certified_accuracy")?;
            for (c, acc) in curve(&recs, &grid)? {
                writeln!(out, "{c},{acc}")?;
            }
        }
        Command::Cardinality {
            length,
            text,
            radius,
            kind,
        } => {
            let seq = text.map(|t| tokenize(&t, cfg.scheme));
            let n = match (&seq, length) {
                (Some(s), _) => s.len() as u64,
                (None, Some(n)) => n,
                (None, None) => bail!(Usage("give --length or --text".into())),
            };
            let kinds: Vec<&str> = match kind.as_str() {
                "all" if seq.is_some() => vec!["hamming", "lev-lower", "lev-exact"],
                "all" => vec!["hamming", "lev-lower"],
                k @ ("hamming" | "lev-lower" | "lev-exact") => vec![k],
                other => bail!(Usage(format!("unknown cardinality kind {other:?}"))),
            };
            let p = CardinalityParams::new(n, cfg.vocab_size, radius);
            writeln!(out, "kind\tlength\tvocab_size\tradius\tcount\tlog10_count")?;
            for k in kinds {
                let count = match k {
                    "hamming" => hamming_ball_cardinality(&p)?,
                    "lev-lower" => lev_ball_cardinality_lower_bound(&p),
                    _ => {
                        let s = seq.as_ref().ok_or_else(|| Usage("lev-exact needs --text".into()))?;
                        lev_ball_cardinality_exact(s, cfg.vocab_size, radius as usize)?
                    }
                };
                writeln!(
                    out,
                    "{k}\t{n}\t{}\t{radius}\t{count}\t{:.6}",
                    cfg.vocab_size,
                    log10_biguint(&count)
                )?;
            }
        }
        Command::Textcrs {
            n,
            max_n,
            kind,
            r_r_cap,
            r_i_cap,
            d_star,
        } => {
            let kind: CoverKind = kind.parse()?;
            let lengths: Vec<usize> = match n {
                Some(n) => vec![n],
                None => (1..=max_n).collect(),
            };
            writeln!(out, "n\tkind\tr_r_cap\tmax_edit_radius\tr_r_min_one_edit")?;
            for n in lengths {
                if n == 0 {
                    bail!(Usage("lengths start at 1".into()));
                }
                let cap = r_r_cap.unwrap_or(n as f64);
                let r = max_certified_edit_radius(n, kind, cap, r_i_cap, d_star)?;
                let one = deletion_cover_radii(n, 1).r_r_min_f64();
                writeln!(out, "{n}\t{kind}\t{cap}\t{r}\t{one}")?;
            }
        }
        Command::Attack {
            data,
            model,
            recipe,
            candidates,
            lexicon,
            lexicon_top_k,
            target,
            out: path,
        } => {
            let f = Loaded::open(model.as_deref(), &cfg)?;
            let ds = LabeledDataset::load(&data)?;
            let recipe = AttackRecipe {
                kind: recipe.parse::<AttackKind>()?,
                candidates_per_position: candidates,
                max_queries: cfg.max_queries,
                timeout_seconds: cfg.timeout_seconds,
            };
            let lexicon = match (lexicon, &f) {
                (Some(p), _) => Lexicon::load(&p)?,
                (None, Loaded::Builtin(m)) => Lexicon::from_model(m, lexicon_top_k),
                (None, Loaded::External(_)) => {
                    bail!(Usage("external classifiers need --lexicon".into()))
                }
            };
            let report = with_predictor(&f, &target, &cfg, |p| run_attack(p, &ds, &recipe, &lexicon, cfg.seed))?;
            write_report(&report, path.as_deref(), out, err)?;
        }
        Command::Transfer {
            source,
            model,
            target,
            out: path,
        } => {
            let text = std::fs::read_to_string(&source).map_err(|e| editcert::Error::Io {
                path: source.clone(),
                source: e,
            })?;
            let src: AttackReport = serde_json::from_str(&text).map_err(|e| editcert::Error::Malformed {
                path: source.clone(),
                message: e.to_string(),
            })?;
            let f = Loaded::open(model.as_deref(), &cfg)?;
            let report = with_predictor(&f, &target, &cfg, |p| transfer_attack(&src, p, cfg.seed))?;
            write_report(&report, path.as_deref(), out, err)?;
        }
    }
    Ok(())
}

fn with_predictor<T>(
    f: &Loaded,
    target: &str,
    cfg: &RunConfig,
    go: impl FnOnce(&dyn Predictor) -> editcert::Result<T>,
) -> Result<T> {
    Ok(match target {
        "smoothed" => go(&SmoothedPredictor {
            base: f,
            mech: f.mechanism(cfg)?,
            samples: cfg.prediction_samples,
            seed: cfg.seed,
        })?,
        "base" => match f {
            Loaded::Builtin(m) => go(&ModelPredictor(m))?,
            Loaded::External(_) => go(&BasePredictor(f))?,
        },
        other => bail!(Usage(format!("unknown target {other:?}; use smoothed or base"))),
    })
}

fn write_report(report: &AttackReport, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let json = serde_json::to_string_pretty(report).context("serializing report")? + "\n";
    emit(path, &json, out)?;
    for s in [AttackStatus::Success, AttackStatus::Fail, AttackStatus::Skipped, AttackStatus::Timeout] {
        writeln!(err, "{s}\t{}", report.count(s))?;
    }
    writeln!(err, "harness_errors\t{}", report.harness_errors.len())?;
    if report.total() > 0 {
        writeln!(err, "clean_accuracy\t{}", report.clean_accuracy()?)?;
        writeln!(err, "robust_accuracy\t{}", report.robust_accuracy()?)?;
        writeln!(err, "mean_queries\t{}", report.mean_queries())?;
    }
    Ok(())
}
