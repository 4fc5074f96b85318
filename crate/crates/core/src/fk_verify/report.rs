//! Line-oriented text records: `tag key=value key=value ...`.
//!
//! Values never contain whitespace; vectors are joined with `;`. Floats use
//! the shortest representation that round-trips, so equal runs give equal bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::dynkin::DynkinResult;
use super::landscape::LandscapeEstimate;
use super::principle::MaxPrincipleReport;
use crate::{Error, Result, Scalar};

/// One `tag key=value ...` line being built.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Record {
    pub tag: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(tag: &str) -> Self {
        Self { tag: tag.to_owned(), fields: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.to_owned(), value.to_string()));
        self
    }

    pub fn real<T: Scalar>(self, key: &str, value: T) -> Self {
        self.field(key, fmt_real(value))
    }

    pub fn reals<T: Scalar>(self, key: &str, values: &[T]) -> Self {
        let joined = values.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(";");
        self.field(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_line(&self) -> String {
        let mut s = self.tag.clone();
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    pub fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_whitespace();
        let tag = parts.next().ok_or_else(|| Error::Parse("empty record line".into()))?.to_owned();
        let mut fields = Vec::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| Error::Parse(format!("field without '=' in {line:?}")))?;
            fields.push((k.to_owned(), v.to_owned()));
        }
        Ok(Self { tag, fields })
    }

    /// Fields as a map (later duplicates win).
    pub fn map(&self) -> BTreeMap<&str, &str> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect()
    }
}

pub fn fmt_real<T: Scalar>(v: T) -> String {
    format!("{:e}", v)
}

/// Parse every non-empty, non-`#` line of a record file.
pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(Record::parse).collect()
}

pub fn estimate_record<T: Scalar>(index: usize, query: &[T], e: &LandscapeEstimate<T>) -> Record {
    Record::new("estimate")
        .field("index", index)
        .reals("z", query)
        .real("mean", e.mean)
        .real("stderr", e.stderr)
        .field("n_hit", e.n_hit)
        .field("n_timeout", e.n_timeout)
        .field("n_boundary", e.n_boundary)
        .field("valid", e.valid)
}

pub fn principle_record<T: Scalar>(r: &MaxPrincipleReport<T>) -> Record {
    Record::new("max_principle")
        .real("min_boundary", r.min_boundary)
        .real("max_boundary", r.max_boundary)
        .real("min_interior", r.min_interior)
        .real("max_interior", r.max_interior)
        .real("slack", r.slack)
        .field("satisfied", r.satisfied)
}

pub fn dynkin_record<T: Scalar>(name: &str, r: &DynkinResult<T>) -> Record {
    Record::new("dynkin").field("name", name).real("residual", r.residual).real("stderr", r.stderr).field("n_paths", r.n_paths)
}
