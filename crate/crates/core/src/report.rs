//! Per-instance certification records, summaries and certified-accuracy
//! curves.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::certify::{certify, CertifyParams, UNBOUNDED_RADIUS};
use crate::classifier::BaseClassifier;
use crate::dataset::LabeledDataset;
use crate::edit_metrics::EditOps;
use crate::error::{Error, Result};
use crate::mechanisms::MechanismParams;
use crate::par;
use crate::tokenization::{tokenize, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct CertRecord {
    pub id: usize,
    pub label: usize,
    pub predicted: usize,
    pub abstained: bool,
    pub mu_y: f64,
    pub mu_yprime: f64,
    pub radius_by_ops: BTreeMap<EditOps, u32>,
    /// log10 of the lower bound on the full-ops certified cardinality.
    pub log10_cc: f64,
    pub n_pred: u64,
    pub n_cert: u64,
}

impl CertRecord {
    pub fn correct(&self) -> bool {
        self.predicted == self.label
    }

    pub fn radius(&self, ops: EditOps) -> u32 {
        self.radius_by_ops[&ops]
    }
}

/// Certifies every instance of `data`. Instance `i` uses draw address
/// `(seed, i)`, so the records do not depend on the thread count.
pub fn certify_dataset<C: BaseClassifier + ?Sized>(
    f: &C,
    data: &LabeledDataset,
    mech: &MechanismParams,
    params: &CertifyParams,
    seed: u64,
    scheme: Scheme,
) -> Result<Vec<CertRecord>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let items = data.items();
    par::try_map_indexed(items.len(), |i| {
        let x = tokenize(&items[i].text, scheme);
        let c = certify(f, &x, mech, params, seed, i as u64)?;
        Ok(CertRecord {
            id: i,
            label: items[i].label,
            predicted: c.predicted,
            abstained: c.abstained,
            mu_y: c.bounds.mu_y,
            mu_yprime: c.bounds.mu_yprime,
            radius_by_ops: c.radius_by_ops,
            log10_cc: c.log10_cardinality_lb,
            n_pred: params.n_pred,
            n_cert: params.n_cert,
        })
    })
}

const FIXED_COLUMNS: [&str; 7] = ["id", "label", "predicted", "correct", "abstained", "mu_y", "mu_yprime"];
const TAIL_COLUMNS: [&str; 3] = ["log10_cc", "n_pred", "n_cert"];

fn header() -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(EditOps::ALL.iter().map(|o| format!("r_{}", o.code())))
        .chain(TAIL_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

fn radius_text(r: u32) -> String {
    if r == UNBOUNDED_RADIUS {
        "inf".into()
    } else {
        r.to_string()
    }
}

/// Writes records as CSV with a header. Radii without a bound print `inf`.
pub fn write_records<W: Write>(records: &[CertRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Malformed {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(header()).map_err(io)?;
    for r in records {
        let mut row = vec![
            r.id.to_string(),
            r.label.to_string(),
            r.predicted.to_string(),
            u8::from(r.correct()).to_string(),
            u8::from(r.abstained).to_string(),
            r.mu_y.to_string(),
            r.mu_yprime.to_string(),
        ];
        row.extend(EditOps::ALL.iter().map(|&o| radius_text(r.radius(o))));
        row.extend([r.log10_cc.to_string(), r.n_pred.to_string(), r.n_cert.to_string()]);
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn records_to_csv(records: &[CertRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Parses the CSV produced by [`write_records`].
pub fn read_records<R: Read>(input: R, path: &Path) -> Result<Vec<CertRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let bad = |line: usize, message: String| Error::DataRow {
        path: path.to_path_buf(),
        line,
        message,
    };
    let cols = rd
        .headers()
        .map_err(|e| bad(1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect::<Vec<_>>();
    if cols != header() {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| bad(line, e.to_string()))?;
        let field = |name: &str| -> Result<&str> {
            let k = cols.iter().position(|c| c == name).expect("known column");
            row.get(k).ok_or_else(|| bad(line, format!("missing {name}")))
        };
        fn num<T: std::str::FromStr>(s: &str, name: &str, line: usize, path: &Path) -> Result<T> {
            s.parse().map_err(|_| Error::DataRow {
                path: path.to_path_buf(),
                line,
                message: format!("bad {name} {s:?}"),
            })
        }
        let mut radius_by_ops = BTreeMap::new();
        for ops in EditOps::ALL {
            let name = format!("r_{}", ops.code());
            let s = field(&name)?;
            let r = if s == "inf" { UNBOUNDED_RADIUS } else { num(s, &name, line, path)? };
            radius_by_ops.insert(ops, r);
        }
        out.push(CertRecord {
            id: num(field("id")?, "id", line, path)?,
            label: num(field("label")?, "label", line, path)?,
            predicted: num(field("predicted")?, "predicted", line, path)?,
            abstained: num::<u8>(field("abstained")?, "abstained", line, path)? != 0,
            mu_y: num(field("mu_y")?, "mu_y", line, path)?,
            mu_yprime: num(field("mu_yprime")?, "mu_yprime", line, path)?,
            radius_by_ops,
            log10_cc: num(field("log10_cc")?, "log10_cc", line, path)?,
            n_pred: num(field("n_pred")?, "n_pred", line, path)?,
            n_cert: num(field("n_cert")?, "n_cert", line, path)?,
        });
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<CertRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(f, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub clean_accuracy: f64,
    pub abstain_rate: f64,
    pub ops: EditOps,
    /// Median `ops` radius over all records, abstentions included as 0.
    /// Infinite when the median radius has no bound.
    pub median_radius: f64,
    pub median_log10_cc: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn summarize(records: &[CertRecord], ops: EditOps) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = records.len() as f64;
    Ok(Summary {
        instances: records.len(),
        clean_accuracy: records.iter().filter(|r| r.correct()).count() as f64 / n,
        abstain_rate: records.iter().filter(|r| r.abstained).count() as f64 / n,
        ops,
        median_radius: median(
            records
                .iter()
                .map(|r| match r.radius(ops) {
                    UNBOUNDED_RADIUS => f64::INFINITY,
                    x => x as f64,
                })
                .collect(),
        ),
        median_log10_cc: median(records.iter().map(|r| r.log10_cc).collect()),
    })
}

/// Certified accuracy at each log10 cardinality threshold: the fraction of
/// records predicted correctly whose certified ball holds at least `10^c`
/// texts.
pub fn curve(records: &[CertRecord], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = records.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&c| {
            let hits = records.iter().filter(|r| r.correct() && r.log10_cc >= c).count();
            (c, hits as f64 / n)
        })
        .collect())
}

/// `points` evenly spaced thresholds from 0 to just past the largest record.
pub fn default_thresholds(records: &[CertRecord], points: usize) -> Vec<f64> {
    let max = records.iter().map(|r| r.log10_cc).fold(0.0, f64::max);
    let top = max.ceil() + 1.0;
    let points = points.max(2);
    (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect()
}
