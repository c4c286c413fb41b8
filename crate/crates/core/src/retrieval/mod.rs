//! Vector retrieval over the knowledge tables and prompt assembly.

mod embed;
mod http;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use embed::{
    cosine, default_embedder, tokenize, Embedder, HashedEmbedder, HttpEmbedder, DEFAULT_DIM,
    EMBED_URL_VAR,
};
pub use http::{post_json, ServiceConfig};

use crate::corpus::{read_jsonl, write_jsonl};
use crate::error::{Error, Result};
use crate::relations::OperatorRelation;
use crate::syntax_kb::SyntaxEntry;

pub const LLM_URL_VAR: &str = "OPSKB_LLM_URL";
pub const DEFAULT_TOP_K: usize = 5;
pub const NO_CONTEXT: &str = "(no knowledge retrieved)";

pub const DEFAULT_TEMPLATE: &str = "\
Use the operator knowledge below when answering the request.

Knowledge:
{context}

Request:
{query}
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KbTable {
    Syntax,
    Relation,
    Itemset,
    Chain,
}

impl KbTable {
    pub fn as_str(self) -> &'static str {
        match self {
            KbTable::Syntax => "syntax",
            KbTable::Relation => "relation",
            KbTable::Itemset => "itemset",
            KbTable::Chain => "chain",
        }
    }
}

impl fmt::Display for KbTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbEntry {
    pub entry_id: String,
    pub table: KbTable,
    pub text: String,
    #[serde(default)]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub entry_id: String,
    pub score: f64,
    pub rank: usize,
}

pub fn render_syntax(e: &SyntaxEntry) -> String {
    format!(
        "{}: {} (returns {})",
        e.full_name, e.description, e.output_type
    )
}

pub fn render_relation(r: &OperatorRelation) -> String {
    format!(
        "{} {} related to {} (frequency {})",
        r.operator, r.relationship, r.related_operator, r.frequency
    )
}

pub fn render_itemset(items: &[String]) -> String {
    let mut items = items.to_vec();
    items.sort();
    items.join(", ")
}

/// An entry awaiting its vector.
#[derive(Debug, Clone)]
pub struct Draft {
    pub entry_id: String,
    pub table: KbTable,
    pub text: String,
}

impl Draft {
    pub fn new(entry_id: impl Into<String>, table: KbTable, text: impl Into<String>) -> Draft {
        Draft {
            entry_id: entry_id.into(),
            table,
            text: text.into(),
        }
    }
}

/// Embeds drafts in batches. Drafts with blank text are skipped.
pub fn embed_entries(embedder: &dyn Embedder, drafts: Vec<Draft>) -> Result<Vec<KbEntry>> {
    let drafts: Vec<Draft> = drafts
        .into_iter()
        .filter(|d| {
            let keep = !d.text.trim().is_empty();
            if !keep {
                warn!("{} has empty text; not indexed", d.entry_id);
            }
            keep
        })
        .collect();
    let mut out = Vec::with_capacity(drafts.len());
    for chunk in drafts.chunks(64) {
        let texts: Vec<String> = chunk.iter().map(|d| d.text.clone()).collect();
        let vectors = embedder.embed_batch(&texts)?;
        for (d, vector) in chunk.iter().zip(vectors) {
            out.push(KbEntry {
                entry_id: d.entry_id.clone(),
                table: d.table,
                text: d.text.clone(),
                vector,
            });
        }
    }
    Ok(out)
}

/// Exact cosine kNN over a fixed set of entries.
pub struct VectorIndex {
    dim: usize,
    entries: Vec<KbEntry>,
    /// Unit-length rows, `dim` values each.
    rows: Vec<f64>,
    by_id: HashMap<String, usize>,
}

impl VectorIndex {
    pub fn build(entries: Vec<KbEntry>) -> Result<VectorIndex> {
        let dim = entries.first().map_or(0, |e| e.vector.len());
        let mut rows = Vec::with_capacity(dim * entries.len());
        let mut by_id = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.vector.len() != dim || dim == 0 {
                return Err(Error::Consistency(format!(
                    "entry {} has dimension {}, index has {dim}",
                    e.entry_id,
                    e.vector.len()
                )));
            }
            if by_id.insert(e.entry_id.clone(), i).is_some() {
                return Err(Error::Consistency(format!(
                    "entry id {} repeats",
                    e.entry_id
                )));
            }
            let norm = e.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
            let norm = if norm == 0.0 { 1.0 } else { norm };
            rows.extend(e.vector.iter().map(|x| x / norm));
        }
        Ok(VectorIndex {
            dim,
            entries,
            rows,
            by_id,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[KbEntry] {
        &self.entries
    }

    pub fn get(&self, entry_id: &str) -> Option<&KbEntry> {
        self.by_id.get(entry_id).map(|&i| &self.entries[i])
    }

    /// Top `k` entries by cosine similarity, ties broken by entry id.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<RetrievalHit>> {
        self.search_with_quota(query, k, None)
    }

    /// As [`VectorIndex::search`], taking at most `per_table` hits from any
    /// one table.
    pub fn search_with_quota(
        &self,
        query: &[f64],
        k: usize,
        per_table: Option<usize>,
    ) -> Result<Vec<RetrievalHit>> {
        if self.is_empty() || k == 0 {
            return Ok(Vec::new());
        }
        if query.len() != self.dim {
            return Err(Error::Consistency(format!(
                "query has dimension {}, index has {}",
                query.len(),
                self.dim
            )));
        }
        let qn = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        let qn = if qn == 0.0 { 1.0 } else { qn };
        let mut scored: Vec<(f64, usize)> = self
            .rows
            .par_chunks(self.dim)
            .enumerate()
            .map(|(i, row)| {
                let dot: f64 = row.iter().zip(query).map(|(a, b)| a * b).sum();
                ((dot / qn).clamp(-1.0, 1.0), i)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.entries[a.1].entry_id.cmp(&self.entries[b.1].entry_id))
        });
        let mut taken: HashMap<KbTable, usize> = HashMap::new();
        let mut hits = Vec::new();
        for (score, i) in scored {
            let e = &self.entries[i];
            if let Some(q) = per_table {
                let n = taken.entry(e.table).or_insert(0);
                if *n >= q {
                    continue;
                }
                *n += 1;
            }
            hits.push(RetrievalHit {
                entry_id: e.entry_id.clone(),
                score,
                rank: hits.len() + 1,
            });
            if hits.len() == k {
                break;
            }
        }
        Ok(hits)
    }
}

pub fn build_index(entries: Vec<KbEntry>) -> Result<VectorIndex> {
    VectorIndex::build(entries)
}

/// Fills `{query}` and `{context}` in one pass, so text inserted for one
/// slot is never rescanned. Context lists hit texts grouped by table; tables
/// appear in the order of their best-ranked hit.
pub fn assemble_prompt(
    query: &str,
    hits: &[RetrievalHit],
    index: &VectorIndex,
    template: &str,
) -> Result<String> {
    let mut groups: Vec<(KbTable, Vec<&str>)> = Vec::new();
    let mut sorted: Vec<&RetrievalHit> = hits.iter().collect();
    sorted.sort_by_key(|h| h.rank);
    for h in sorted {
        let e = index
            .get(&h.entry_id)
            .ok_or_else(|| Error::Consistency(format!("hit {} is not in the index", h.entry_id)))?;
        match groups.iter_mut().find(|(t, _)| *t == e.table) {
            Some((_, texts)) => texts.push(&e.text),
            None => groups.push((e.table, vec![&e.text])),
        }
    }
    let context = if groups.is_empty() {
        NO_CONTEXT.to_string()
    } else {
        groups
            .iter()
            .map(|(table, texts)| {
                let lines: Vec<String> = texts.iter().map(|t| format!("- {t}")).collect();
                format!("[{table}]\n{}", lines.join("\n"))
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    };

    let mut out = String::with_capacity(template.len() + context.len() + query.len());
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix("{query}") {
            out.push_str(query);
            rest = after;
        } else if let Some(after) = tail.strip_prefix("{context}") {
            out.push_str(&context);
            rest = after;
        } else {
            out.push('{');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}

pub fn check_template(template: &str) -> Result<()> {
    for slot in ["{query}", "{context}"] {
        if !template.contains(slot) {
            return Err(Error::Config(format!(
                "prompt template lacks the {slot} slot"
            )));
        }
    }
    Ok(())
}

/// Client for a text-completion service: request `{"prompt"}` (plus
/// `"model"` when set), response `{"text"}`.
#[derive(Debug, Clone)]
pub struct LlmClient {
    pub service: ServiceConfig,
    pub model: Option<String>,
}

#[derive(Deserialize)]
struct LlmResponse {
    text: String,
}

impl LlmClient {
    pub fn new(url: impl Into<String>) -> LlmClient {
        LlmClient {
            service: ServiceConfig::new(url),
            model: None,
        }
    }

    /// The client named by `OPSKB_LLM_URL`, if set.
    pub fn from_env() -> Option<LlmClient> {
        std::env::var(LLM_URL_VAR)
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(LlmClient::new)
    }

    pub fn complete(&self, prompt: &str) -> Result<String> {
        let mut body = serde_json::json!({ "prompt": prompt });
        if let Some(m) = &self.model {
            body["model"] = serde_json::Value::String(m.clone());
        }
        let resp: LlmResponse = post_json(&self.service, &body)?;
        Ok(resp.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbMeta {
    pub embedder: String,
    pub dim: usize,
    pub entries: usize,
    pub tables: HashMap<KbTable, usize>,
}

pub const KB_ENTRIES_FILE: &str = "kb.jsonl";
pub const KB_META_FILE: &str = "kb_meta.json";

pub fn write_kb(dir: &Path, embedder_tag: &str, entries: &[KbEntry]) -> Result<KbMeta> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tables = HashMap::new();
    for e in entries {
        *tables.entry(e.table).or_insert(0) += 1;
    }
    let meta = KbMeta {
        embedder: embedder_tag.to_string(),
        dim: entries.first().map_or(0, |e| e.vector.len()),
        entries: entries.len(),
        tables,
    };
    write_jsonl(&dir.join(KB_ENTRIES_FILE), entries)?;
    let path = dir.join(KB_META_FILE);
    let text = serde_json::to_string_pretty(&sorted_meta(&meta))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(meta)
}

fn sorted_meta(meta: &KbMeta) -> serde_json::Value {
    let tables: std::collections::BTreeMap<&str, usize> =
        meta.tables.iter().map(|(t, n)| (t.as_str(), *n)).collect();
    serde_json::json!({
        "embedder": meta.embedder,
        "dim": meta.dim,
        "entries": meta.entries,
        "tables": tables,
    })
}

pub fn load_kb(dir: &Path) -> Result<(KbMeta, VectorIndex)> {
    let path = dir.join(KB_META_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: KbMeta = serde_json::from_str(&text)?;
    let entries: Vec<KbEntry> = read_jsonl(&dir.join(KB_ENTRIES_FILE))?;
    if entries.len() != meta.entries {
        return Err(Error::Consistency(format!(
            "{} lists {} entries, found {}",
            KB_META_FILE,
            meta.entries,
            entries.len()
        )));
    }
    Ok((meta, VectorIndex::build(entries)?))
}

/// The embedder that produced a stored index. Queries must use it, so
/// vectors from different embedders are never compared.
pub fn embedder_for(meta: &KbMeta) -> Result<Box<dyn Embedder>> {
    let builtin = HashedEmbedder::default();
    if meta.embedder == builtin.tag() {
        return Ok(Box::new(builtin));
    }
    if let Some(url) = meta.embedder.strip_prefix("http:") {
        let url = std::env::var(EMBED_URL_VAR).unwrap_or_else(|_| url.to_string());
        let e = HttpEmbedder::new(&url);
        if e.tag() != meta.embedder {
            warn!("index was built by {}, querying {}", meta.embedder, e.tag());
        }
        return Ok(Box::new(e));
    }
    Err(Error::Config(format!(
        "index was built by unknown embedder `{}`",
        meta.embedder
    )))
}
