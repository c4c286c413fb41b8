mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opskb::evalkit::{LcsNorm, NgramCoef};
use opskb::miner::TxnMode;
use opskb::relations::ParallelRule;
use opskb::Error;

#[derive(Parser)]
#[command(
    name = "opskb",
    version,
    about = "Build and query an operator knowledge base from script corpora"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read source files from a directory into a JSON-lines corpus.
    Ingest {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// File suffix to include; repeatable.
        #[arg(long = "ext", default_value = ".js")]
        ext: Vec<String>,
        #[arg(long, default_value_t = opskb::corpus::DEFAULT_MAX_BYTES)]
        max_bytes: u64,
        /// Reject later files whose content duplicates an earlier one.
        #[arg(long)]
        dedup: bool,
    },
    /// Strip comments from every raw record.
    Clean {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse cleaned records; split into valid and rejected.
    Validate {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rejects: PathBuf,
        /// Write one normalized AST per script into this directory.
        #[arg(long)]
        ast_dir: Option<PathBuf>,
        /// Per-script parse limit in milliseconds; 0 disables it.
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
    },
    /// Extract relations, chains and mining input from validated records.
    Extract {
        input: PathBuf,
        #[arg(long)]
        relations: Option<PathBuf>,
        /// Per-script relation instances (the format `eval relations` reads).
        #[arg(long)]
        per_script: Option<PathBuf>,
        #[arg(long)]
        chains: Option<PathBuf>,
        /// Per-script operators and relations for `mine`.
        #[arg(long)]
        txns: Option<PathBuf>,
        /// Render nesting with `->` like sequences (lossy; not parseable back).
        #[arg(long, alias = "paper-style")]
        plain_arrows: bool,
        #[arg(long, default_value = "dataflow")]
        parallel_rule: ParallelRule,
    },
    /// Mine frequent itemsets and association rules.
    Mine {
        input: PathBuf,
        #[command(flatten)]
        miner: MinerArgs,
        #[arg(long, default_value = "script")]
        txn_mode: TxnMode,
        #[arg(long)]
        itemsets: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        min_confidence: f64,
    },
    /// Report call names that do not appear in the syntax table.
    CheckNames {
        input: PathBuf,
        #[arg(long)]
        syntax: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Embed knowledge-base tables into a searchable index directory.
    BuildKb {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        syntax: Option<PathBuf>,
        #[arg(long)]
        relations: Option<PathBuf>,
        #[arg(long)]
        itemsets: Option<PathBuf>,
        #[arg(long)]
        chains: Option<PathBuf>,
    },
    /// Retrieve knowledge for a request and assemble a prompt.
    Query {
        text: String,
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = opskb::retrieval::DEFAULT_TOP_K)]
        top_k: usize,
        /// At most this many hits from any one table.
        #[arg(long)]
        per_table: Option<usize>,
        #[arg(long)]
        prompt_out: Option<PathBuf>,
        /// Prompt template with `{query}` and `{context}` slots.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Send the prompt to the completion service named by OPSKB_LLM_URL.
        #[arg(long)]
        complete: bool,
    },
    /// Score extraction output against reference annotations.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run every stage from a corpus directory to the finished tables.
    Pipeline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        syntax: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        miner: MinerArgs,
        #[arg(long, default_value = "dataflow")]
        parallel_rule: ParallelRule,
        #[arg(long, default_value = "script")]
        txn_mode: TxnMode,
        #[arg(long, default_value_t = 0.0)]
        min_confidence: f64,
        #[arg(long = "ext", default_value = ".js")]
        ext: Vec<String>,
        #[arg(long, default_value_t = opskb::corpus::DEFAULT_MAX_BYTES)]
        max_bytes: u64,
        #[arg(long)]
        dedup: bool,
        #[arg(long, default_value_t = 10_000)]
        timeout_ms: u64,
        #[arg(long, alias = "paper-style")]
        plain_arrows: bool,
        /// Skip embedding the knowledge base.
        #[arg(long)]
        no_kb: bool,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    Relations {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    Chains {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 3)]
        ngram_n: usize,
        #[arg(long, default_value = "dice")]
        ngram_coef: NgramCoef,
        #[arg(long, default_value = "max")]
        lcs_norm: LcsNorm,
        /// Also score embedding similarity with the default embedder.
        #[arg(long)]
        embed: bool,
    },
}

#[derive(Args, Clone)]
struct MinerArgs {
    #[arg(long, default_value_t = 0.05)]
    min_support: f64,
    #[arg(long, default_value_t = 0.2)]
    start_support: f64,
    #[arg(long, default_value_t = 0.5)]
    descent_factor: f64,
    #[arg(long, default_value_t = 2)]
    low_freq_floor: u64,
    #[arg(long, default_value_t = 4096)]
    batch_size: usize,
    /// Largest itemset size to mine.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, default_value_t = opskb::miner::DEFAULT_MAX_ITEMSETS)]
    max_itemsets: usize,
}

/// 2: bad configuration or arguments, 3: unusable input, 4: a stage failed.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Argument(_) => 2,
        Error::Io { .. }
        | Error::Json(_)
        | Error::Csv(_)
        | Error::Schema { .. }
        | Error::DuplicateEntries(_)
        | Error::ChainSyntax { .. } => 3,
        Error::Stage { source, .. } if matches!(**source, Error::Config(_)) => 2,
        _ => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
