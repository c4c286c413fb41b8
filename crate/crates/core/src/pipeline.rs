//! End-to-end run: ingest, clean, validate, extract, mine and index, with a
//! manifest of inputs, counts and output digests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ast::{self, ParseOptions, SyntaxTree};
use crate::chains::{write_chains_csv, ChainRecord, ChainStyle};
use crate::corpus::{self, write_jsonl, IngestOptions, ScriptRecord, Stage};
use crate::error::{Error, Result};
use crate::miner::{
    self, derive_rules, mine_with_optimizations, write_itemsets_csv, write_rules_csv, MinerConfig,
    Transaction, TxnMode,
};
use crate::relations::{
    self, extract_occurrences, write_relations_csv, write_script_relations_csv, OperatorRelation,
    ParallelRule, Relation, ScriptRelation,
};
use crate::retrieval::{self, default_embedder, Draft, KbTable};
use crate::syntax_kb::{self, SyntaxEntry};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses every cleaned record in parallel. Records keep their order; each
/// successfully parsed one is paired with its tree.
pub fn validate_records(
    records: Vec<ScriptRecord>,
    opts: &ParseOptions,
) -> Vec<(ScriptRecord, Option<SyntaxTree>)> {
    records
        .into_par_iter()
        .map(|mut r| {
            if r.stage != Stage::Cleaned {
                return (r, None);
            }
            let tree = ast::parse(&mut r, opts).ok();
            (r, tree)
        })
        .collect()
}

/// What extraction yields for one script. The JSON form (one object per
/// line) omits the chain and is the input format for mining.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptExtraction {
    pub script_id: String,
    pub operators: Vec<String>,
    pub relations: Vec<Relation>,
    #[serde(skip)]
    pub chain: Option<crate::chains::Chain>,
}

pub fn extract_script(script_id: &str, tree: &SyntaxTree, rule: ParallelRule) -> ScriptExtraction {
    let occs = extract_occurrences(tree);
    let analysis = relations::analyze(tree, &occs, rule);
    ScriptExtraction {
        script_id: script_id.to_string(),
        operators: occs.into_iter().map(|o| o.canonical_name).collect(),
        relations: analysis.relations,
        chain: analysis.chain,
    }
}

pub fn extract_all<'a, I>(trees: I, rule: ParallelRule) -> Vec<ScriptExtraction>
where
    I: IntoParallelIterator<Item = (&'a str, &'a SyntaxTree)>,
    I::Iter: IndexedParallelIterator,
{
    trees
        .into_par_iter()
        .map(|(id, t)| extract_script(id, t, rule))
        .collect()
}

pub fn per_script_relations(ex: &[ScriptExtraction]) -> Vec<ScriptRelation> {
    ex.iter()
        .flat_map(|e| {
            e.relations.iter().map(|r| ScriptRelation {
                script_name: e.script_id.clone(),
                relation: r.clone(),
            })
        })
        .collect()
}

pub fn chain_records(ex: &[ScriptExtraction]) -> Vec<ChainRecord> {
    ex.iter()
        .filter_map(|e| {
            e.chain.clone().map(|chain| ChainRecord {
                script_name: e.script_id.clone(),
                chain,
            })
        })
        .collect()
}

pub fn transactions(ex: &[ScriptExtraction], mode: TxnMode) -> Vec<Transaction> {
    match mode {
        TxnMode::Script => miner::build_transactions(
            ex.iter()
                .map(|e| (e.script_id.clone(), e.operators.clone())),
        ),
        TxnMode::RelationPairs => miner::relation_pair_transactions(
            ex.iter()
                .map(|e| (e.script_id.as_str(), e.relations.as_slice())),
        ),
    }
}

/// Knowledge-base drafts for all four tables.
pub fn kb_drafts(
    syntax: &[SyntaxEntry],
    relations: &[OperatorRelation],
    itemsets: &[Vec<String>],
    chains: &[(String, String)],
) -> Vec<Draft> {
    let mut out = Vec::new();
    for (i, e) in syntax.iter().enumerate() {
        out.push(Draft::new(
            format!("syntax:{}", i + 1),
            KbTable::Syntax,
            retrieval::render_syntax(e),
        ));
    }
    for (i, r) in relations.iter().enumerate() {
        out.push(Draft::new(
            format!("relation:{}", i + 1),
            KbTable::Relation,
            retrieval::render_relation(r),
        ));
    }
    for (i, s) in itemsets.iter().enumerate() {
        out.push(Draft::new(
            format!("itemset:{}", i + 1),
            KbTable::Itemset,
            retrieval::render_itemset(s),
        ));
    }
    for (name, chain) in chains {
        out.push(Draft::new(
            format!("chain:{name}"),
            KbTable::Chain,
            chain.clone(),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub syntax: Option<PathBuf>,
    pub out: PathBuf,
    pub extensions: Vec<String>,
    pub max_bytes: u64,
    pub dedup: bool,
    pub parse_timeout_ms: u64,
    pub parallel_rule: ParallelRule,
    pub txn_mode: TxnMode,
    pub miner: MinerConfig,
    pub min_confidence: f64,
    pub plain_arrows: bool,
    pub build_kb: bool,
}

impl PipelineConfig {
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> PipelineConfig {
        let ingest = IngestOptions::default();
        PipelineConfig {
            corpus: corpus.into(),
            syntax: None,
            out: out.into(),
            extensions: ingest.extensions,
            max_bytes: ingest.max_bytes,
            dedup: ingest.dedup,
            parse_timeout_ms: 10_000,
            parallel_rule: ParallelRule::default(),
            txn_mode: TxnMode::default(),
            miner: MinerConfig::default(),
            min_confidence: 0.0,
            plain_arrows: false,
            build_kb: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.miner.validate()?;
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::Config("min_confidence must be in [0, 1]".into()));
        }
        if self.extensions.is_empty() {
            return Err(Error::Config("at least one extension is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub ingested: usize,
    pub cleaned: usize,
    pub validated: usize,
    pub rejected: usize,
    pub relations: usize,
    pub relation_instances: usize,
    pub transactions: usize,
    pub itemsets: usize,
    pub rules: usize,
    pub chains: usize,
    pub kb_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    /// SHA-256 of each input file's content, keyed by script id, plus the
    /// syntax table under `syntax`.
    pub input_digests: BTreeMap<String, String>,
    pub counts: StageCounts,
    pub output_digests: BTreeMap<String, String>,
    pub embedder: Option<String>,
    pub timestamp: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARTIAL_SUFFIX: &str = ".partial";

/// Output files written by [`run_pipeline`], in write order.
pub const OUTPUT_FILES: [&str; 10] = [
    "syntax.csv",
    "rejects.jsonl",
    "relations.csv",
    "relations_per_script.csv",
    "chains.csv",
    "itemsets.csv",
    "rules.csv",
    retrieval::KB_ENTRIES_FILE,
    retrieval::KB_META_FILE,
    MANIFEST_FILE,
];

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Writes outputs under their `.partial` names and renames them all once
/// the run succeeds.
struct Staging {
    dir: PathBuf,
    written: Vec<&'static str>,
}

impl Staging {
    fn path(&mut self, name: &'static str) -> PathBuf {
        self.written.push(name);
        self.dir.join(format!("{name}{PARTIAL_SUFFIX}"))
    }

    fn commit(&self) -> Result<()> {
        for name in &self.written {
            let from = self.dir.join(format!("{name}{PARTIAL_SUFFIX}"));
            let to = self.dir.join(name);
            std::fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        Ok(())
    }
}

/// Checks that the inputs exist and the syntax table is well-formed.
/// Errors here are input errors, not stage failures.
pub fn preflight(cfg: &PipelineConfig) -> Result<Option<Vec<SyntaxEntry>>> {
    cfg.validate()?;
    let meta = std::fs::metadata(&cfg.corpus).map_err(|e| Error::io(&cfg.corpus, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            &cfg.corpus,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    cfg.syntax
        .as_deref()
        .map(syntax_kb::load_syntax)
        .transpose()
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    let syntax = preflight(cfg)?;
    let out = &cfg.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for name in OUTPUT_FILES {
        for candidate in [out.join(name), out.join(format!("{name}{PARTIAL_SUFFIX}"))] {
            if candidate.exists() {
                std::fs::remove_file(&candidate).map_err(|e| Error::io(&candidate, e))?;
            }
        }
    }
    let mut staging = Staging {
        dir: out.clone(),
        written: Vec::new(),
    };
    let mut counts = StageCounts::default();
    let mut input_digests = BTreeMap::new();

    if let (Some(path), Some(entries)) = (&cfg.syntax, &syntax) {
        input_digests.insert("syntax".to_string(), file_digest(path)?);
        let dest = staging.path("syntax.csv");
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            syntax_kb::write_syntax_csv(&dest, entries).map_err(|e| e.in_stage("syntax"))?;
        } else {
            std::fs::copy(path, &dest).map_err(|e| Error::io(&dest, e).in_stage("syntax"))?;
        }
    }

    let ingest_opts = IngestOptions {
        extensions: cfg.extensions.clone(),
        max_bytes: cfg.max_bytes,
        dedup: cfg.dedup,
    };
    let records = corpus::ingest(&cfg.corpus, &ingest_opts).map_err(|e| e.in_stage("ingest"))?;
    counts.ingested = records.len();
    for r in &records {
        let digest = if r.stage == Stage::Rejected {
            format!("rejected:{}", r.reject_reason.as_deref().unwrap_or(""))
        } else {
            sha256_hex(r.text.as_bytes())
        };
        input_digests.insert(r.script_id.clone(), digest);
    }
    info!("ingested {} scripts", counts.ingested);

    let records = corpus::clean(records).map_err(|e| e.in_stage("clean"))?;
    counts.cleaned = records.iter().filter(|r| r.stage == Stage::Cleaned).count();

    let opts = ParseOptions {
        timeout: (cfg.parse_timeout_ms > 0).then(|| Duration::from_millis(cfg.parse_timeout_ms)),
    };
    let validated = validate_records(records, &opts);
    let mut rejects = Vec::new();
    let mut trees = Vec::new();
    for (r, t) in validated {
        match t {
            Some(t) => trees.push((r.script_id.clone(), t)),
            None => rejects.push(r),
        }
    }
    counts.validated = trees.len();
    counts.rejected = rejects.len();
    info!(
        "validated {}, rejected {}",
        counts.validated, counts.rejected
    );
    write_jsonl(&staging.path("rejects.jsonl"), &rejects).map_err(|e| e.in_stage("validate"))?;

    let ex = extract_all(
        trees.par_iter().map(|(id, t)| (id.as_str(), t)),
        cfg.parallel_rule,
    );
    let per_script = per_script_relations(&ex);
    let aggregated = relations::aggregate(ex.iter().map(|e| e.relations.iter().cloned()));
    counts.relation_instances = per_script.len();
    counts.relations = aggregated.len();
    write_relations_csv(&staging.path("relations.csv"), &aggregated)
        .map_err(|e| e.in_stage("extract"))?;
    write_script_relations_csv(&staging.path("relations_per_script.csv"), &per_script)
        .map_err(|e| e.in_stage("extract"))?;
    let chains = chain_records(&ex);
    for e in ex.iter().filter(|e| e.chain.is_none()) {
        warn!("{} has no operators; no chain", e.script_id);
    }
    counts.chains = chains.len();
    let style = if cfg.plain_arrows {
        ChainStyle::PlainArrows
    } else {
        ChainStyle::Canonical
    };
    write_chains_csv(&staging.path("chains.csv"), &chains, style)
        .map_err(|e| e.in_stage("extract"))?;

    let txns = transactions(&ex, cfg.txn_mode);
    counts.transactions = txns.len();
    let itemsets = mine_with_optimizations(&txns, &cfg.miner).map_err(|e| e.in_stage("mine"))?;
    let rules = derive_rules(&itemsets, cfg.min_confidence).map_err(|e| e.in_stage("mine"))?;
    counts.itemsets = itemsets.len();
    counts.rules = rules.len();
    write_itemsets_csv(&staging.path("itemsets.csv"), &itemsets).map_err(|e| e.in_stage("mine"))?;
    write_rules_csv(&staging.path("rules.csv"), &rules).map_err(|e| e.in_stage("mine"))?;

    let mut embedder_tag = None;
    if cfg.build_kb {
        let embedder = default_embedder();
        let chain_texts: Vec<(String, String)> = chains
            .iter()
            .map(|c| (c.script_name.clone(), c.chain.to_string()))
            .collect();
        let item_lists: Vec<Vec<String>> = itemsets.iter().map(|s| s.items.clone()).collect();
        let drafts = kb_drafts(
            syntax.as_deref().unwrap_or(&[]),
            &aggregated,
            &item_lists,
            &chain_texts,
        );
        let entries = retrieval::embed_entries(embedder.as_ref(), drafts)
            .map_err(|e| e.in_stage("build-kb"))?;
        counts.kb_entries = entries.len();
        // The KB writer uses fixed names, so stage it in a scratch directory.
        let scratch = out.join(format!("kb{PARTIAL_SUFFIX}"));
        retrieval::write_kb(&scratch, &embedder.tag(), &entries)
            .map_err(|e| e.in_stage("build-kb"))?;
        for name in [retrieval::KB_ENTRIES_FILE, retrieval::KB_META_FILE] {
            let dest = staging.path(name);
            std::fs::rename(scratch.join(name), &dest)
                .map_err(|e| Error::io(&dest, e).in_stage("build-kb"))?;
        }
        let _ = std::fs::remove_dir(&scratch);
        embedder_tag = Some(embedder.tag());
    }

    let manifest_path = staging.path(MANIFEST_FILE);
    let mut manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        input_digests,
        counts,
        output_digests: BTreeMap::new(),
        embedder: embedder_tag,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    // Digests are taken from the staged files, then the manifest is written
    // last so it can list them.
    let mut digests = BTreeMap::new();
    for name in staging.written.iter().filter(|n| **n != MANIFEST_FILE) {
        let p = out.join(format!("{name}{PARTIAL_SUFFIX}"));
        digests.insert(name.to_string(), file_digest(&p)?);
    }
    manifest.output_digests = digests;
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| Error::io(&manifest_path, e))?;
    staging.commit()?;
    info!("wrote {}", out.display());
    Ok(manifest)
}
