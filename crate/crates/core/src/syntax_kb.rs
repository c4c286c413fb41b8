//! Operator syntax table: loading, validation and name checks.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::{check_header, OperatorOccurrence};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default)]
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxEntry {
    pub full_name: String,
    pub short_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub output_type: String,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
}

impl SyntaxEntry {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.full_name.is_empty() {
            return Err("full_name is empty".into());
        }
        if self.short_name.is_empty() {
            return Err("short_name is empty".into());
        }
        let mut seen = HashSet::new();
        for p in &self.parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(format!("parameter `{}` appears twice", p.name));
            }
        }
        Ok(())
    }
}

const HEADER: [&str; 6] = [
    "index",
    "full_name",
    "short_name",
    "description",
    "output_type",
    "parameters",
];

/// Loads a syntax table from `.json` (an array of entries) or CSV
/// (any other extension).
pub fn load_syntax(path: &Path) -> Result<Vec<SyntaxEntry>> {
    let entries = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        load_json(path)?
    } else {
        load_csv(path)?
    };
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for e in &entries {
        *counts.entry(e.full_name.as_str()).or_insert(0) += 1;
    }
    let dups: BTreeSet<&str> = counts
        .into_iter()
        .filter(|&(_, n)| n > 1)
        .map(|(k, _)| k)
        .collect();
    if !dups.is_empty() {
        return Err(Error::DuplicateEntries(
            dups.into_iter().map(str::to_string).collect(),
        ));
    }
    Ok(entries)
}

fn load_json(path: &Path) -> Result<Vec<SyntaxEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<serde_json::Value> = serde_json::from_str(&text)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            let schema = |message: String| Error::Schema {
                row: i + 1,
                message,
            };
            let entry: SyntaxEntry =
                serde_json::from_value(v).map_err(|e| schema(e.to_string()))?;
            entry.validate().map_err(schema)?;
            Ok(entry)
        })
        .collect()
}

fn load_csv(path: &Path) -> Result<Vec<SyntaxEntry>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    check_header(&r.headers()?.clone(), &HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let schema = |message: String| Error::Schema { row, message };
        let rec = rec?;
        if rec.len() != HEADER.len() {
            return Err(schema(format!(
                "expected {} fields, found {}",
                HEADER.len(),
                rec.len()
            )));
        }
        let params = rec[5].trim();
        let parameters = if params.is_empty() {
            Vec::new()
        } else {
            serde_json::from_str(params)
                .map_err(|e| schema(format!("parameters is not a JSON array of parameters: {e}")))?
        };
        let entry = SyntaxEntry {
            full_name: rec[1].to_string(),
            short_name: rec[2].to_string(),
            description: rec[3].to_string(),
            output_type: rec[4].to_string(),
            parameters,
        };
        entry.validate().map_err(schema)?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_syntax_csv(path: &Path, entries: &[SyntaxEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for (i, e) in entries.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.full_name.clone(),
            e.short_name.clone(),
            e.description.clone(),
            e.output_type.clone(),
            serde_json::to_string(&e.parameters)?,
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NameReport {
    pub total: usize,
    pub known: usize,
    /// Occurrences that matched nothing.
    pub unknown_occurrences: usize,
    /// Distinct unmatched canonical names, sorted.
    pub unknown: Vec<String>,
}

/// Lookup built from a syntax table: exact full names plus the final dotted
/// segment of every short name. Matching is case-sensitive.
pub struct NameIndex {
    full: HashSet<String>,
    tails: HashSet<String>,
}

impl NameIndex {
    pub fn new(entries: &[SyntaxEntry]) -> NameIndex {
        NameIndex {
            full: entries.iter().map(|e| e.full_name.clone()).collect(),
            tails: entries
                .iter()
                .map(|e| tail(&e.short_name).to_string())
                .collect(),
        }
    }

    pub fn is_known(&self, canonical_name: &str, short_name: &str) -> bool {
        self.full.contains(canonical_name) || self.tails.contains(short_name)
    }
}

fn tail(name: &str) -> &str {
    name.rsplit('.').next().unwrap_or(name)
}

pub fn check_known<'a, I>(occurrences: I, entries: &[SyntaxEntry]) -> NameReport
where
    I: IntoIterator<Item = &'a OperatorOccurrence>,
{
    let index = NameIndex::new(entries);
    let mut report = NameReport::default();
    let mut unknown = BTreeSet::new();
    for occ in occurrences {
        report.total += 1;
        if index.is_known(&occ.canonical_name, &occ.short_name) {
            report.known += 1;
        } else {
            report.unknown_occurrences += 1;
            unknown.insert(occ.canonical_name.clone());
        }
    }
    report.unknown = unknown.into_iter().collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_segment() {
        assert_eq!(
            tail("ee.Image.normalizedDifference"),
            "normalizedDifference"
        );
        assert_eq!(tail("clip"), "clip");
    }

    #[test]
    fn duplicate_parameter_names_are_rejected() {
        let p = Parameter {
            name: "x".into(),
            ty: "Float".into(),
            default: None,
            details: String::new(),
        };
        let e = SyntaxEntry {
            full_name: "f".into(),
            short_name: "f".into(),
            description: String::new(),
            output_type: String::new(),
            parameters: vec![p.clone(), p],
        };
        assert!(e.validate().is_err());
    }
}
