//! Lossless tabular export.
//!
//! Every number is written in its shortest round-trip decimal form; integral
//! values below `2^53` are written as integers. Non-finite values appear as
//! `inf`, `-inf` and `NaN` in both formats.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::Format;
use crate::error::{Error, Result};

/// Column schema of each table kind.
pub fn schema(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "dist" => &["offset", "mass"],
        "tail_check" => &["x", "p_hat", "q_hat"],
        "renewal" => &["x", "u"],
        "srt_ratio" => &["x", "u", "ratio", "trunc_err", "flagged"],
        "an_profile" => &["delta", "x", "r", "std_error"],
        "an_score" => &["delta", "an_score"],
        "lld" => &["n", "x", "prob", "ratio", "std_error", "flagged"],
        "fuk_nagaev" => &["n", "x", "prob", "ratio"],
        "appendix" => &["x", "half_over_tilde", "tilde_over_plain", "chain_over_tilde", "tilde2_over_plain2"],
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub kind: String,
    pub columns: Vec<String>,
    #[serde(serialize_with = "ser_rows", deserialize_with = "de_rows")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Empty table with the schema of `kind`.
    pub fn new(name: impl Into<String>, kind: &str) -> Result<Self> {
        let cols = schema(kind).ok_or_else(|| Error::Invariant(format!("no schema for table kind {kind}")))?;
        Ok(Self {
            name: name.into(),
            kind: kind.into(),
            columns: cols.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn check_schema(&self) -> Result<()> {
        let cols = schema(&self.kind).ok_or_else(|| Error::Invariant(format!("unknown table kind {}", self.kind)))?;
        if self.columns.len() != cols.len()
            || self.columns.iter().zip(cols).any(|(a, b)| a != b)
            || self.rows.iter().any(|r| r.len() != cols.len())
        {
            return Err(Error::Invariant(format!("table {} does not match the {} schema", self.name, self.kind)));
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.columns)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|v| fmt_num(*v)))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(name: &str, kind: &str, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let columns: Vec<String> = rd.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            rows.push(rec.iter().map(parse_num).collect::<Result<Vec<f64>>>()?);
        }
        let t = Self { name: name.into(), kind: kind.into(), columns, rows };
        t.check_schema()?;
        Ok(t)
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 && !(v == 0.0 && v.is_sign_negative()) {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Serialization(format!("bad number {s:?}: {e}")))
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    F(f64),
    S(String),
}

fn ser_rows<S: Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let enc: Vec<Vec<Num>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| if v.is_finite() { Num::F(v) } else { Num::S(fmt_num(v)) }).collect())
        .collect();
    enc.serialize(s)
}

fn de_rows<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    let enc: Vec<Vec<Num>> = Vec::deserialize(d)?;
    enc.into_iter()
        .map(|r| {
            r.into_iter()
                .map(|n| match n {
                    Num::F(v) => Ok(v),
                    Num::S(s) => parse_num(&s).map_err(serde::de::Error::custom),
                })
                .collect()
        })
        .collect()
}

/// A report: named tables plus the provenance of the law they were computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub kind: String,
    /// Law header: span, window, tail model and builder constants.
    pub provenance: serde_json::Value,
    pub tables: Vec<Table>,
    /// Scalar summaries and verdicts.
    pub notes: BTreeMap<String, String>,
}

impl ReportDoc {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// Writes `doc` under `dir`: `<kind>.json`, or one `<table>.csv` per table.
pub fn export(doc: &ReportDoc, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    for t in &doc.tables {
        t.check_schema()?;
    }
    fs::create_dir_all(dir)?;
    match format {
        Format::Json => {
            let path = dir.join(format!("{}.json", doc.kind));
            fs::write(&path, serde_json::to_vec_pretty(doc)?)?;
            Ok(vec![path])
        }
        Format::Csv => doc
            .tables
            .iter()
            .map(|t| {
                let path = dir.join(format!("{}.csv", t.name));
                t.write_csv(fs::File::create(&path)?)?;
                Ok(path)
            })
            .collect(),
    }
}
