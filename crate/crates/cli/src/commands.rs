use std::path::Path;
use std::time::Duration;

use log::{info, warn};
use opskb::ast::{parse_source, ParseOptions, SyntaxTree};
use opskb::chains::{read_chains_csv, write_chains_csv, ChainStyle};
use opskb::corpus::{self, read_jsonl, write_jsonl, IngestOptions, ScriptRecord, Stage};
use opskb::evalkit::{self, ChainEvalConfig};
use opskb::miner::{self, MinerConfig};
use opskb::pipeline::{self, PipelineConfig, ScriptExtraction};
use opskb::relations::{self, extract_occurrences, ParallelRule};
use opskb::retrieval::{self, LlmClient};
use opskb::syntax_kb;
use opskb::{Error, Result};
use rayon::prelude::*;

use crate::{Command, EvalCommand, MinerArgs};

impl MinerArgs {
    fn config(&self) -> MinerConfig {
        MinerConfig {
            min_support: self.min_support,
            start_support: self.start_support,
            descent_factor: self.descent_factor,
            low_freq_floor: self.low_freq_floor,
            batch_size: self.batch_size,
            max_len: self.max_len,
            max_itemsets: self.max_itemsets,
        }
    }
}

fn parse_options(timeout_ms: u64) -> ParseOptions {
    ParseOptions {
        timeout: (timeout_ms > 0).then(|| Duration::from_millis(timeout_ms)),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Re-parses validated records; anything else in the file is skipped.
fn validated_trees(path: &Path) -> Result<Vec<SyntaxTree>> {
    let records: Vec<ScriptRecord> = read_jsonl(path)?;
    let opts = ParseOptions { timeout: None };
    records
        .par_iter()
        .enumerate()
        .filter(|(_, r)| r.stage == Stage::Validated)
        .map(|(i, r)| {
            parse_source(&r.script_id, &r.text, &opts).map_err(|e| Error::Schema {
                row: i + 1,
                message: format!(
                    "{} is marked validated but does not parse: {e:?}",
                    r.script_id
                ),
            })
        })
        .collect()
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest {
            dir,
            out,
            ext,
            max_bytes,
            dedup,
        } => {
            let opts = IngestOptions {
                extensions: ext,
                max_bytes,
                dedup,
            };
            let records = corpus::ingest(&dir, &opts)?;
            let stats = corpus::corpus_stats(&records);
            info!(
                "ingested {} scripts ({} bytes), {} rejected",
                stats.script_count, stats.total_bytes, stats.rejected_count
            );
            write_jsonl(&out, &records)
        }
        Command::Clean { input, out } => {
            let records = corpus::clean(read_jsonl(&input)?)?;
            write_jsonl(&out, &records)
        }
        Command::Validate {
            input,
            out,
            rejects,
            ast_dir,
            timeout_ms,
        } => {
            let records: Vec<ScriptRecord> = read_jsonl(&input)?;
            let results = pipeline::validate_records(records, &parse_options(timeout_ms));
            let mut valid = Vec::new();
            let mut rejected = Vec::new();
            for (r, tree) in results {
                if let (Some(dir), Some(tree)) = (&ast_dir, &tree) {
                    let path = dir.join(format!("{}.json", r.script_id));
                    if let Some(parent) = path.parent() {
                        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                            path: parent.to_path_buf(),
                            source: e,
                        })?;
                    }
                    std::fs::write(&path, tree.to_json())
                        .map_err(|e| Error::Io { path, source: e })?;
                }
                match r.stage {
                    Stage::Validated => valid.push(r),
                    _ => rejected.push(r),
                }
            }
            info!("{} valid, {} rejected", valid.len(), rejected.len());
            write_jsonl(&out, &valid)?;
            write_jsonl(&rejects, &rejected)
        }
        Command::Extract {
            input,
            relations,
            per_script,
            chains,
            txns,
            plain_arrows,
            parallel_rule,
        } => extract(
            &input,
            relations.as_deref(),
            per_script.as_deref(),
            chains.as_deref(),
            txns.as_deref(),
            plain_arrows,
            parallel_rule,
        ),
        Command::Mine {
            input,
            miner: args,
            txn_mode,
            itemsets,
            rules,
            min_confidence,
        } => {
            let cfg = args.config();
            cfg.validate()?;
            if !(0.0..=1.0).contains(&min_confidence) {
                return Err(Error::Config("min_confidence must be in [0, 1]".into()));
            }
            let ex: Vec<ScriptExtraction> = read_jsonl(&input)?;
            let txns = pipeline::transactions(&ex, txn_mode);
            let sets = miner::mine_with_optimizations(&txns, &cfg)?;
            info!(
                "{} transactions, {} frequent itemsets",
                txns.len(),
                sets.len()
            );
            miner::write_itemsets_csv(&itemsets, &sets)?;
            if let Some(path) = rules {
                let rules = miner::derive_rules(&sets, min_confidence)?;
                info!("{} rules", rules.len());
                miner::write_rules_csv(&path, &rules)?;
            }
            Ok(())
        }
        Command::CheckNames {
            input,
            syntax,
            report,
        } => {
            let entries = syntax_kb::load_syntax(&syntax)?;
            let trees = validated_trees(&input)?;
            let occs: Vec<_> = trees.iter().flat_map(extract_occurrences).collect();
            let r = syntax_kb::check_known(&occs, &entries);
            info!(
                "{} of {} call occurrences known; {} distinct unknown names",
                r.known,
                r.total,
                r.unknown.len()
            );
            write_json(&report, &r)
        }
        Command::BuildKb {
            out,
            syntax,
            relations,
            itemsets,
            chains,
        } => {
            let syntax = syntax.map(|p| syntax_kb::load_syntax(&p)).transpose()?;
            let relations = relations
                .map(|p| relations::read_relations_csv(&p))
                .transpose()?;
            let itemsets: Option<Vec<Vec<String>>> = itemsets
                .map(|p| miner::read_itemsets_csv(&p))
                .transpose()?
                .map(|v| v.into_iter().map(|(items, _)| items).collect());
            let chains = chains.map(|p| read_chains_csv(&p)).transpose()?;
            let drafts = pipeline::kb_drafts(
                syntax.as_deref().unwrap_or(&[]),
                relations.as_deref().unwrap_or(&[]),
                itemsets.as_deref().unwrap_or(&[]),
                chains.as_deref().unwrap_or(&[]),
            );
            if drafts.is_empty() {
                return Err(Error::Argument("no tables given; nothing to index".into()));
            }
            let embedder = retrieval::default_embedder();
            let entries = retrieval::embed_entries(embedder.as_ref(), drafts)?;
            let meta = retrieval::write_kb(&out, &embedder.tag(), &entries)?;
            info!("indexed {} entries with {}", meta.entries, meta.embedder);
            Ok(())
        }
        Command::Query {
            text,
            kb,
            top_k,
            per_table,
            prompt_out,
            template,
            complete,
        } => {
            let template = match template {
                Some(p) => {
                    std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p, source: e })?
                }
                None => retrieval::DEFAULT_TEMPLATE.to_string(),
            };
            retrieval::check_template(&template)?;
            let (meta, index) = retrieval::load_kb(&kb)?;
            let embedder = retrieval::embedder_for(&meta)?;
            let q = embedder.embed(&text)?;
            let hits = index.search_with_quota(&q, top_k, per_table)?;
            for h in &hits {
                let e = index.get(&h.entry_id).expect("hit comes from the index");
                println!("{}\t{:.4}\t{}\t{}", h.rank, h.score, h.entry_id, e.text);
            }
            let prompt = retrieval::assemble_prompt(&text, &hits, &index, &template)?;
            if let Some(p) = &prompt_out {
                std::fs::write(p, &prompt).map_err(|e| Error::Io {
                    path: p.clone(),
                    source: e,
                })?;
            }
            if complete {
                let client = LlmClient::from_env().ok_or_else(|| {
                    Error::Config(format!(
                        "--complete needs {} to be set",
                        retrieval::LLM_URL_VAR
                    ))
                })?;
                println!("{}", client.complete(&prompt)?);
            }
            Ok(())
        }
        Command::Eval(EvalCommand::Relations {
            pred,
            truth,
            report,
        }) => {
            let pred = relations::read_script_relations_csv(&pred)?;
            let truth = relations::read_script_relations_csv(&truth)?;
            let r = evalkit::evaluate_relations(&pred, &truth);
            info!(
                "{} scripts; mean accuracy {}, F1 {}",
                r.rows.len(),
                evalkit::fmt2(r.mean.accuracy),
                evalkit::fmt2(r.mean.f1)
            );
            write_json(&report, &r)
        }
        Command::Eval(EvalCommand::Chains {
            pred,
            truth,
            report,
            ngram_n,
            ngram_coef,
            lcs_norm,
            embed,
        }) => {
            if ngram_n == 0 {
                return Err(Error::Config("--ngram-n must be at least 1".into()));
            }
            let cfg = ChainEvalConfig {
                ngram_n,
                ngram_coef,
                lcs_norm,
            };
            let pred = read_chains_csv(&pred)?;
            let truth = read_chains_csv(&truth)?;
            let embedder = embed.then(retrieval::default_embedder);
            let r = evalkit::evaluate_chains(&pred, &truth, &cfg, embedder.as_deref())?;
            info!(
                "{} scripts; mean LCS {}, n-gram {}",
                r.rows.len(),
                evalkit::fmt2(r.mean.lcs),
                evalkit::fmt2(r.mean.ngram)
            );
            write_json(&report, &r)
        }
        Command::Pipeline {
            corpus,
            syntax,
            out,
            miner: args,
            parallel_rule,
            txn_mode,
            min_confidence,
            ext,
            max_bytes,
            dedup,
            timeout_ms,
            plain_arrows,
            no_kb,
        } => {
            let cfg = PipelineConfig {
                syntax,
                extensions: ext,
                max_bytes,
                dedup,
                parse_timeout_ms: timeout_ms,
                parallel_rule,
                txn_mode,
                miner: args.config(),
                min_confidence,
                plain_arrows,
                build_kb: !no_kb,
                ..PipelineConfig::new(corpus, out)
            };
            let m = pipeline::run_pipeline(&cfg)?;
            let c = &m.counts;
            info!(
                "validated {}, rejected {}; {} relations, {} itemsets, {} rules, {} chains",
                c.validated, c.rejected, c.relations, c.itemsets, c.rules, c.chains
            );
            Ok(())
        }
    }
}

fn extract(
    input: &Path,
    relations_out: Option<&Path>,
    per_script_out: Option<&Path>,
    chains_out: Option<&Path>,
    txns_out: Option<&Path>,
    plain_arrows: bool,
    rule: ParallelRule,
) -> Result<()> {
    if [relations_out, per_script_out, chains_out, txns_out]
        .iter()
        .all(Option::is_none)
    {
        return Err(Error::Argument(
            "nothing to write; pass --relations, --per-script, --chains or --txns".into(),
        ));
    }
    let trees = validated_trees(input)?;
    let ex = pipeline::extract_all(trees.par_iter().map(|t| (t.script_id.as_str(), t)), rule);
    if let Some(p) = relations_out {
        let agg = relations::aggregate(ex.iter().map(|e| e.relations.iter().cloned()));
        info!("{} distinct relations", agg.len());
        relations::write_relations_csv(p, &agg)?;
    }
    if let Some(p) = per_script_out {
        relations::write_script_relations_csv(p, &pipeline::per_script_relations(&ex))?;
    }
    if let Some(p) = chains_out {
        for e in ex.iter().filter(|e| e.chain.is_none()) {
            warn!("{} has no operators; no chain", e.script_id);
        }
        let style = if plain_arrows {
            ChainStyle::PlainArrows
        } else {
            ChainStyle::Canonical
        };
        write_chains_csv(p, &pipeline::chain_records(&ex), style)?;
    }
    if let Some(p) = txns_out {
        write_jsonl(p, &ex)?;
    }
    Ok(())
}
