//! Serialisable command records and their text, CSV and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::optimizer::{SiftingResult, Table2Row};

pub const CSV_HEADER: &str = "kappa,u,a,I,err,beta";
pub const EVAL_CSV_HEADER: &str = "kind,kappa,u,a,value,bound,oracle_delta";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// Which quantity an `eval` row holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalKind {
    J,
    Jprime,
    MainTerm,
}

impl EvalKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::J => "j",
            Self::Jprime => "jprime",
            Self::MainTerm => "main-term",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<Vec<u32>>,
    pub truncation: usize,
    pub nu_max: usize,
    pub panel_order: usize,
    #[serde(serialize_with = "opt_sig17", skip_serializing_if = "Option::is_none", default)]
    pub u_tol: Option<f64>,
}

/// A point evaluated at fixed `(u, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    #[serde(serialize_with = "sig17")]
    pub u: f64,
    #[serde(serialize_with = "sig17")]
    pub a: f64,
    #[serde(rename = "I", serialize_with = "sig17")]
    pub i_tilde: f64,
    #[serde(serialize_with = "sig17")]
    pub err: f64,
}

/// A certified limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub kappa: u32,
    #[serde(serialize_with = "sig17")]
    pub u: f64,
    #[serde(serialize_with = "sig17")]
    pub a: f64,
    #[serde(rename = "I", serialize_with = "sig17")]
    pub i_tilde: f64,
    #[serde(serialize_with = "sig17")]
    pub err: f64,
    #[serde(serialize_with = "sig17")]
    pub beta: f64,
    #[serde(serialize_with = "opt_sig17", skip_serializing_if = "Option::is_none", default)]
    pub dhr_beta: Option<f64>,
}

impl From<SiftingResult> for LimitRow {
    fn from(r: SiftingResult) -> Self {
        Self {
            kappa: r.kappa,
            u: r.u,
            a: r.a,
            i_tilde: r.i_tilde,
            err: r.err,
            beta: r.beta,
            dhr_beta: r.dhr_beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    #[serde(serialize_with = "sig17")]
    pub beta: f64,
    #[serde(rename = "I", serialize_with = "sig17")]
    pub i_tilde: f64,
    #[serde(serialize_with = "sig17")]
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Row {
    Eval {
        kind: EvalKind,
        kappa: u32,
        #[serde(serialize_with = "sig17")]
        u: f64,
        #[serde(serialize_with = "opt_sig17", skip_serializing_if = "Option::is_none", default)]
        a: Option<f64>,
        #[serde(serialize_with = "sig17")]
        value: f64,
        #[serde(serialize_with = "sig17")]
        bound: f64,
        #[serde(serialize_with = "opt_sig17", skip_serializing_if = "Option::is_none", default)]
        oracle_delta: Option<f64>,
    },
    Table2 {
        kappa: u32,
        published: PointRow,
        optimized: LimitRow,
        reference: ReferenceRow,
    },
    Limit(LimitRow),
}

impl Row {
    pub fn table2(row: &Table2Row) -> Self {
        Self::Table2 {
            kappa: row.kappa,
            published: PointRow {
                u: row.published.u,
                a: row.published.a,
                i_tilde: row.published.i_tilde,
                err: row.published.err,
            },
            optimized: row.optimized.into(),
            reference: ReferenceRow {
                beta: row.reference.beta,
                i_tilde: row.reference.i_tilde,
                error: row.reference.error,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: String,
    pub params: Params,
    pub rows: Vec<Row>,
    #[serde(serialize_with = "opt_sig17", skip_serializing_if = "Option::is_none", default)]
    pub timing_ms: Option<f64>,
}

fn raw17(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::Format(format!("non-finite value {x} cannot be written")));
    }
    RawValue::from_string(format!("{x:.16e}")).map_err(|e| Error::Format(e.to_string()))
}

fn sig17<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    raw17(*x).map_err(serde::ser::Error::custom)?.serialize(s)
}

fn opt_sig17<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig17(v, s),
        None => s.serialize_none(),
    }
}

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `x` with 6 significant digits in the shorter of fixed and scientific notation.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    if !(-4..6).contains(&exp) {
        let (mantissa, e) = sci.split_once('e').unwrap();
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl OutputRecord {
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => Ok(self.to_csv()),
            Format::Text => Ok(self.to_text()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    /// Table rows use [`CSV_HEADER`] with the optimized point; `eval` rows
    /// use [`EVAL_CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let evals = self.rows.iter().all(|r| matches!(r, Row::Eval { .. })) && !self.rows.is_empty();
        out.push_str(if evals { EVAL_CSV_HEADER } else { CSV_HEADER });
        out.push('\n');
        for row in &self.rows {
            let line = match row {
                Row::Eval { kind, kappa, u, a, value, bound, oracle_delta } => format!(
                    "{},{kappa},{},{},{},{},{}",
                    kind.name(),
                    fmt17(*u),
                    a.map(fmt17).unwrap_or_default(),
                    fmt17(*value),
                    fmt17(*bound),
                    oracle_delta.map(fmt17).unwrap_or_default()
                ),
                Row::Table2 { optimized: r, .. } | Row::Limit(r) => format!(
                    "{},{},{},{},{},{}",
                    r.kappa,
                    fmt17(r.u),
                    fmt17(r.a),
                    fmt17(r.i_tilde),
                    fmt17(r.err),
                    fmt17(r.beta)
                ),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let _ = write!(
            out,
            "{}  (N = {}, circles = {}, panel order = {}",
            self.command, p.truncation, p.nu_max, p.panel_order
        );
        if let Some(tol) = p.u_tol {
            let _ = write!(out, ", u tol = {}", fmt6(tol));
        }
        out.push_str(")\n");
        for row in &self.rows {
            match row {
                Row::Eval { kind, kappa, u, a, value, bound, oracle_delta } => {
                    let _ = write!(out, "{} kappa={kappa} u={}", kind.name(), fmt6(*u));
                    if let Some(a) = a {
                        let _ = write!(out, " a={}", fmt6(*a));
                    }
                    let _ = write!(out, "  value={}  bound={}", fmt6(*value), fmt6(*bound));
                    if let Some(d) = oracle_delta {
                        let _ = write!(out, "  oracle delta={}", fmt6(*d));
                    }
                    out.push('\n');
                }
                Row::Table2 { kappa, published, optimized, reference } => {
                    let _ = writeln!(
                        out,
                        "kappa={kappa:<2}  published u={} a={}: I={} err={} (listed I={} error={})",
                        fmt6(published.u),
                        fmt6(published.a),
                        fmt6(published.i_tilde),
                        fmt6(published.err),
                        fmt6(reference.i_tilde),
                        fmt6(reference.error)
                    );
                    let _ = writeln!(
                        out,
                        "          optimized u={} a={}: I={} err={}  beta={} (listed {})",
                        fmt6(optimized.u),
                        fmt6(optimized.a),
                        fmt6(optimized.i_tilde),
                        fmt6(optimized.err),
                        fmt6(optimized.beta),
                        fmt6(reference.beta)
                    );
                }
                Row::Limit(r) => {
                    let _ = write!(
                        out,
                        "kappa={}  u={}  a={}  I={}  err={}  beta={}",
                        r.kappa,
                        fmt6(r.u),
                        fmt6(r.a),
                        fmt6(r.i_tilde),
                        fmt6(r.err),
                        fmt6(r.beta)
                    );
                    if let Some(d) = r.dhr_beta {
                        let _ = write!(out, "  (DHR {})", fmt6(d));
                    }
                    out.push('\n');
                }
            }
        }
        if let Some(ms) = self.timing_ms {
            let _ = writeln!(out, "time: {} ms", fmt6(ms));
        }
        out
    }
}
