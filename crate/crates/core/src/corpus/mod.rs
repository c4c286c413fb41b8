//! Loading raw scripts from disk and tracking them through the cleaning and
//! validation stages.

mod strip;

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::{debug, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{Error, Result};

pub use strip::{strip_comments, strip_comments_with_warnings, StripOutput};

pub const DEFAULT_MAX_BYTES: u64 = 2 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Cleaned,
    Validated,
    Rejected,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Cleaned => "cleaned",
            Stage::Validated => "validated",
            Stage::Rejected => "rejected",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRecord {
    pub script_id: String,
    pub source_path: String,
    pub text: String,
    pub byte_size: u64,
    pub stage: Stage,
    pub reject_reason: Option<String>,
}

impl ScriptRecord {
    pub fn new(script_id: impl Into<String>, source_path: impl Into<String>, text: String) -> Self {
        ScriptRecord {
            script_id: script_id.into(),
            source_path: source_path.into(),
            byte_size: text.len() as u64,
            text,
            stage: Stage::Raw,
            reject_reason: None,
        }
    }

    /// Moves the record forward. Rejection is allowed from any non-terminal
    /// stage; everything else must follow raw -> cleaned -> validated.
    pub fn advance(&mut self, to: Stage) -> Result<()> {
        let ok = matches!(
            (self.stage, to),
            (Stage::Raw, Stage::Cleaned)
                | (Stage::Cleaned, Stage::Validated)
                | (Stage::Raw | Stage::Cleaned, Stage::Rejected)
        );
        if !ok {
            return Err(Error::StageTransition {
                from: self.stage.as_str(),
                to: to.as_str(),
            });
        }
        self.stage = to;
        Ok(())
    }

    pub fn reject(&mut self, reason: impl Into<String>) -> Result<()> {
        self.advance(Stage::Rejected)?;
        self.reject_reason = Some(reason.into());
        Ok(())
    }

    pub fn set_text(&mut self, text: String) {
        self.byte_size = text.len() as u64;
        self.text = text;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub script_count: u64,
    pub total_bytes: u64,
    pub min_bytes: u64,
    pub max_bytes: u64,
    pub rejected_count: u64,
}

pub fn corpus_stats(records: &[ScriptRecord]) -> CorpusStats {
    if records.is_empty() {
        return CorpusStats::default();
    }
    let mut stats = CorpusStats {
        min_bytes: u64::MAX,
        ..CorpusStats::default()
    };
    for r in records {
        stats.script_count += 1;
        stats.total_bytes += r.byte_size;
        stats.min_bytes = stats.min_bytes.min(r.byte_size);
        stats.max_bytes = stats.max_bytes.max(r.byte_size);
        if r.stage == Stage::Rejected {
            stats.rejected_count += 1;
        }
    }
    stats
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub extensions: Vec<String>,
    pub max_bytes: u64,
    pub dedup: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            extensions: vec![".js".to_string()],
            max_bytes: DEFAULT_MAX_BYTES,
            dedup: false,
        }
    }
}

/// Loads every file under `dir` whose name ends with one of the configured
/// suffixes. Records come back sorted by source path regardless of the order
/// the filesystem yields entries or how many threads read them.
pub fn ingest(dir: &Path, opts: &IngestOptions) -> Result<Vec<ScriptRecord>> {
    if opts.extensions.is_empty() {
        return Err(Error::Argument("at least one extension is required".into()));
    }
    let meta = std::fs::metadata(dir).map_err(|e| Error::io(dir, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }

    let mut paths = Vec::new();
    for entry in WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if opts
            .extensions
            .iter()
            .any(|ext| name.ends_with(ext.as_str()))
        {
            paths.push(entry.into_path());
        }
    }
    paths.sort();

    let mut records = paths
        .par_iter()
        .map(|path| load_one(dir, path, opts.max_bytes))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.source_path.cmp(&b.source_path));

    if opts.dedup {
        let mut seen = HashSet::new();
        for r in records.iter_mut().filter(|r| r.stage == Stage::Raw) {
            let digest = Sha256::digest(r.text.as_bytes());
            if !seen.insert(digest) {
                debug!("{} duplicates an earlier script", r.script_id);
                r.set_text(String::new());
                r.reject("duplicate")?;
            }
        }
    }
    Ok(records)
}

fn load_one(root: &Path, path: &Path, max_bytes: u64) -> Result<ScriptRecord> {
    let rel = path.strip_prefix(root).unwrap_or(path);
    let script_id = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/");
    let source_path = path.to_string_lossy().into_owned();

    let size = std::fs::metadata(path)
        .map_err(|e| Error::io(path, e))?
        .len();
    if size > max_bytes {
        let mut r = ScriptRecord::new(script_id, source_path, String::new());
        r.reject("oversize")?;
        return Ok(r);
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match String::from_utf8(bytes) {
        Ok(text) => Ok(ScriptRecord::new(script_id, source_path, text)),
        Err(_) => {
            warn!("{} is not valid UTF-8", path.display());
            let mut r = ScriptRecord::new(script_id, source_path, String::new());
            r.reject("encoding")?;
            Ok(r)
        }
    }
}

/// Strips comments from every raw record and marks it cleaned. Records in
/// other stages pass through untouched.
pub fn clean(records: Vec<ScriptRecord>) -> Result<Vec<ScriptRecord>> {
    records
        .into_par_iter()
        .map(|mut r| {
            if r.stage == Stage::Raw {
                let out = strip_comments_with_warnings(&r.text);
                for w in &out.warnings {
                    warn!("{}: {}", r.script_id, w);
                }
                r.set_text(out.text);
                r.advance(Stage::Cleaned)?;
            }
            Ok(r)
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
