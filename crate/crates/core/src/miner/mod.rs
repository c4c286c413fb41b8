//! Frequent operator itemsets and association rules.

mod fptree;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::AtomicUsize;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::{check_header, Relation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub txn_id: String,
    /// Distinct item names in ascending order.
    pub items: Vec<String>,
}

impl Transaction {
    pub fn new(txn_id: impl Into<String>, items: impl IntoIterator<Item = String>) -> Transaction {
        let items: BTreeSet<String> = items.into_iter().collect();
        Transaction {
            txn_id: txn_id.into(),
            items: items.into_iter().collect(),
        }
    }
}

/// A frequent itemset. Support is kept as the exact ratio `count / total`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Itemset {
    /// Item names in ascending order.
    pub items: Vec<String>,
    pub count: u64,
    pub total: u64,
}

impl Itemset {
    pub fn support(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocRule {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub antecedent_support: f64,
    pub consequent_support: f64,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerConfig {
    pub min_support: f64,
    pub start_support: f64,
    pub descent_factor: f64,
    /// Items seen in fewer transactions are dropped before the tree is
    /// built. Clamped to the minimum-support count, so it never removes a
    /// frequent item.
    pub low_freq_floor: u64,
    pub batch_size: usize,
    /// Largest itemset size to mine; `None` for no limit.
    #[serde(default)]
    pub max_len: Option<usize>,
    /// Upper bound on the number of frequent itemsets. Exceeding it is a
    /// configuration error rather than an unbounded allocation.
    #[serde(default = "default_max_itemsets")]
    pub max_itemsets: usize,
}

fn default_max_itemsets() -> usize {
    DEFAULT_MAX_ITEMSETS
}

pub const DEFAULT_MAX_ITEMSETS: usize = 1_000_000;
/// Upper bound on antecedent/consequent splits examined by [`derive_rules`].
pub const MAX_RULE_CANDIDATES: u64 = 20_000_000;

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            min_support: 0.05,
            start_support: 0.20,
            descent_factor: 0.5,
            low_freq_floor: 2,
            batch_size: 4096,
            max_len: None,
            max_itemsets: DEFAULT_MAX_ITEMSETS,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |c: bool, msg: &str| {
            if c {
                Ok(())
            } else {
                Err(Error::Config(msg.into()))
            }
        };
        ok(
            self.min_support > 0.0 && self.min_support <= 1.0,
            "min_support must be in (0, 1]",
        )?;
        ok(
            self.start_support >= self.min_support && self.start_support <= 1.0,
            "start_support must be in [min_support, 1]",
        )?;
        ok(
            self.descent_factor > 0.0 && self.descent_factor < 1.0,
            "descent_factor must be in (0, 1)",
        )?;
        ok(self.batch_size >= 1, "batch_size must be at least 1")?;
        ok(self.max_len != Some(0), "max_len must be at least 1")
    }
}

/// Whether `count` of `total` transactions reaches `min_support`. Every
/// frequency decision in this module goes through this comparison.
pub fn meets_support(count: u64, total: u64, min_support: f64) -> bool {
    total > 0 && count as f64 / total as f64 >= min_support
}

/// Smallest count that meets `min_support`, or `total + 1` when none does.
fn min_count(total: u64, min_support: f64) -> u64 {
    let guess = (min_support * total as f64).ceil().max(0.0) as u64;
    let mut c = guess.saturating_sub(2);
    while c <= total && !meets_support(c, total, min_support) {
        c += 1;
    }
    c.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxnMode {
    /// One transaction per script holding its distinct operator names.
    #[default]
    Script,
    /// One transaction per relation instance holding its two operators.
    RelationPairs,
}

impl FromStr for TxnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "script" => Ok(TxnMode::Script),
            "relation_pairs" => Ok(TxnMode::RelationPairs),
            other => Err(Error::Config(format!("unknown transaction mode `{other}`"))),
        }
    }
}

/// One transaction per script from its operator names; scripts without
/// operators are dropped. Output is ordered by transaction id.
pub fn build_transactions<I, S>(scripts: I) -> Vec<Transaction>
where
    I: IntoIterator<Item = (String, S)>,
    S: IntoIterator<Item = String>,
{
    let mut out: Vec<Transaction> = scripts
        .into_iter()
        .filter_map(|(id, names)| {
            let t = Transaction::new(id, names);
            if t.items.is_empty() {
                debug!("{} has no operators; no transaction", t.txn_id);
                None
            } else {
                Some(t)
            }
        })
        .collect();
    out.sort_by(|a, b| a.txn_id.cmp(&b.txn_id));
    out
}

/// One transaction per relation instance, with ids `<script>#<n>`.
pub fn relation_pair_transactions<'a, I>(scripts: I) -> Vec<Transaction>
where
    I: IntoIterator<Item = (&'a str, &'a [Relation])>,
{
    let mut out = Vec::new();
    let mut scripts: Vec<_> = scripts.into_iter().collect();
    scripts.sort_by(|a, b| a.0.cmp(b.0));
    for (id, rels) in scripts {
        for (k, r) in rels.iter().enumerate() {
            out.push(Transaction::new(
                format!("{id}#{k}"),
                [r.operator.clone(), r.related_operator.clone()],
            ));
        }
    }
    out
}

/// Canonical order: size, then support descending, then items.
fn sort_itemsets(sets: &mut [Itemset]) {
    sets.sort_by(|a, b| {
        a.items
            .len()
            .cmp(&b.items.len())
            .then(b.count.cmp(&a.count))
            .then_with(|| a.items.cmp(&b.items))
    });
}

/// Item vocabulary ranked by descending count, then name.
struct Vocab {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn new(counts: HashMap<&str, u64>, keep: impl Fn(u64) -> bool) -> Vocab {
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| keep(c)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let names: Vec<String> = ranked.iter().map(|(n, _)| n.to_string()).collect();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Vocab { names, ids }
    }

    /// Item ids of a transaction in rank order, unknown items dropped.
    fn encode(&self, t: &Transaction) -> Vec<u32> {
        let mut row: Vec<u32> = t
            .items
            .iter()
            .filter_map(|i| self.ids.get(i).copied())
            .collect();
        row.sort_unstable();
        row
    }

    fn decode(&self, ids: &[u32], count: u64, total: u64) -> Itemset {
        let mut items: Vec<String> = ids
            .iter()
            .map(|&i| self.names[i as usize].clone())
            .collect();
        items.sort();
        Itemset {
            items,
            count,
            total,
        }
    }
}

fn count_items(txns: &[Transaction]) -> HashMap<&str, u64> {
    let mut counts = HashMap::new();
    for t in txns {
        for i in &t.items {
            *counts.entry(i.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

fn limits(cfg: &MinerConfig, min_count: u64) -> fptree::Limits {
    fptree::Limits {
        min_count,
        max_len: cfg.max_len.unwrap_or(usize::MAX),
        budget: cfg.max_itemsets,
    }
}

fn overflow(cfg: &MinerConfig, support: f64) -> Error {
    Error::Config(format!(
        "more than {} frequent itemsets at support {support}; raise min_support or set max_len",
        cfg.max_itemsets
    ))
}

/// Plain FP-Growth: every itemset whose support reaches `cfg.min_support`
/// (and whose size is within `cfg.max_len`), with exact counts, in
/// canonical order.
pub fn fp_growth(txns: &[Transaction], cfg: &MinerConfig) -> Result<Vec<Itemset>> {
    let total = txns.len() as u64;
    if total == 0 {
        return Ok(Vec::new());
    }
    let threshold = min_count(total, cfg.min_support);
    let vocab = Vocab::new(count_items(txns), |c| c >= threshold);
    let mut tree = fptree::FpTree::new(vocab.names.len());
    for t in txns {
        let row = vocab.encode(t);
        if !row.is_empty() {
            tree.insert(&row, 1);
        }
    }
    let mut found = Vec::new();
    tree.mine(
        &mut Vec::new(),
        &limits(cfg, threshold),
        &AtomicUsize::new(0),
        &mut found,
    )
    .map_err(|_| overflow(cfg, cfg.min_support))?;
    let mut out: Vec<Itemset> = found
        .into_iter()
        .map(|(ids, c)| vocab.decode(&ids, c, total))
        .collect();
    sort_itemsets(&mut out);
    Ok(out)
}

/// Item-occurrence matrix in compressed sparse row form: row `r` holds the
/// ranked item ids of transaction `r`.
struct SparseRows {
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl SparseRows {
    fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.offsets.windows(2).map(|w| &self.items[w[0]..w[1]])
    }
}

/// FP-Growth with the four performance measures: low-frequency prefilter,
/// batched counting and insertion, a sparse item matrix, and a descending
/// support schedule whose rounds are unioned. Produces exactly the output
/// of [`fp_growth`].
pub fn mine_with_optimizations(txns: &[Transaction], cfg: &MinerConfig) -> Result<Vec<Itemset>> {
    let total = txns.len() as u64;
    if total == 0 {
        return Ok(Vec::new());
    }
    let threshold = min_count(total, cfg.min_support);
    let batch = cfg.batch_size.max(1);

    // Batched counting, merged across workers.
    let counts = txns
        .par_chunks(batch)
        .map(count_items)
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let floor = cfg.low_freq_floor.min(threshold);
    let before = counts.len();
    let vocab = Vocab::new(counts, |c| c >= floor && c >= threshold);
    debug!(
        "prefilter kept {} of {} items (count >= {})",
        vocab.names.len(),
        before,
        threshold.max(floor)
    );

    // Sparse encoding, one batch at a time.
    let mut matrix = SparseRows {
        offsets: vec![0],
        items: Vec::new(),
    };
    for chunk in txns.chunks(batch) {
        let rows: Vec<Vec<u32>> = chunk.par_iter().map(|t| vocab.encode(t)).collect();
        for row in rows {
            matrix.items.extend_from_slice(&row);
            matrix.offsets.push(matrix.items.len());
        }
    }

    let mut tree = fptree::FpTree::new(vocab.names.len());
    for row in matrix.rows() {
        if !row.is_empty() {
            tree.insert(row, 1);
        }
    }

    let mut union: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for support in support_schedule(cfg) {
        let round_threshold = min_count(total, support).max(threshold);
        let found = tree
            .mine_parallel(&limits(cfg, round_threshold))
            .map_err(|_| overflow(cfg, support))?;
        let new = found.len();
        for (mut ids, c) in found {
            ids.sort_unstable();
            union.insert(ids, c);
        }
        info!(
            "support round {support}: {new} itemsets, {} total",
            union.len()
        );
    }

    let mut out: Vec<Itemset> = union
        .into_iter()
        .map(|(ids, c)| vocab.decode(&ids, c, total))
        .collect();
    sort_itemsets(&mut out);
    Ok(out)
}

/// `start_support`, multiplied by `descent_factor` each round, ending with
/// a round at exactly `min_support`.
pub fn support_schedule(cfg: &MinerConfig) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = cfg.start_support;
    while s > cfg.min_support && out.len() < 64 {
        out.push(s);
        s *= cfg.descent_factor;
    }
    out.push(cfg.min_support);
    out
}

/// Association rules from every split of every itemset of size two or more.
/// Requires the support of every subset to be present in `itemsets`.
pub fn derive_rules(itemsets: &[Itemset], min_confidence: f64) -> Result<Vec<AssocRule>> {
    let lookup: HashMap<&[String], &Itemset> =
        itemsets.iter().map(|s| (s.items.as_slice(), s)).collect();
    let get = |items: &[String]| -> Result<&Itemset> {
        lookup.get(items).copied().ok_or_else(|| {
            Error::Consistency(format!("support of {{{}}} is missing", items.join(", ")))
        })
    };

    let candidates: u64 = itemsets
        .iter()
        .filter(|s| s.items.len() >= 2)
        .map(|s| {
            1u64.checked_shl(s.items.len() as u32)
                .unwrap_or(u64::MAX)
                .saturating_sub(2)
        })
        .fold(0, u64::saturating_add);
    if candidates > MAX_RULE_CANDIDATES {
        return Err(Error::Config(format!(
            "{candidates} candidate rules exceed the limit of {MAX_RULE_CANDIDATES}; raise min_support or set max_len"
        )));
    }

    let mut rules = Vec::new();
    for set in itemsets.iter().filter(|s| s.items.len() >= 2) {
        let n = set.items.len();
        let mut splits: Vec<(Vec<String>, Vec<String>)> = (1..(1u32 << n) - 1)
            .map(|mask| {
                let (mut a, mut c) = (Vec::new(), Vec::new());
                for (i, item) in set.items.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        a.push(item.clone());
                    } else {
                        c.push(item.clone());
                    }
                }
                (a, c)
            })
            .collect();
        splits.sort_by(|x, y| x.0.len().cmp(&y.0.len()).then_with(|| x.0.cmp(&y.0)));
        for (a, c) in splits {
            let ant = get(&a)?;
            let cons = get(&c)?;
            if ant.total != set.total || cons.total != set.total {
                return Err(Error::Consistency(
                    "itemsets come from different transaction totals".into(),
                ));
            }
            let confidence = set.count as f64 / ant.count as f64;
            if confidence < min_confidence {
                continue;
            }
            let consequent_support = cons.support();
            rules.push(AssocRule {
                antecedent: a,
                consequent: c,
                antecedent_support: ant.support(),
                consequent_support,
                support: set.support(),
                confidence,
                lift: confidence / consequent_support,
            });
        }
    }
    Ok(rules)
}

const ITEMSETS_HEADER: [&str; 3] = ["index", "frequent_itemset", "support"];
const RULES_HEADER: [&str; 8] = [
    "index",
    "antecedents",
    "consequents",
    "antecedent_support",
    "consequent_support",
    "support",
    "confidence",
    "lift",
];

pub fn write_itemsets_csv(path: &Path, sets: &[Itemset]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ITEMSETS_HEADER)?;
    for (i, s) in sets.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            s.items.join(";"),
            s.support().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an itemsets table. Counts are not stored in the file, so the
/// returned itemsets carry supports only.
pub fn read_itemsets_csv(path: &Path) -> Result<Vec<(Vec<String>, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&r.headers()?.clone(), &ITEMSETS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let support: f64 = rec
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Schema {
                row: i + 2,
                message: "support is not a number".into(),
            })?;
        let items = rec
            .get(1)
            .unwrap_or("")
            .split(';')
            .map(str::to_string)
            .collect();
        out.push((items, support));
    }
    Ok(out)
}

pub fn write_rules_csv(path: &Path, rules: &[AssocRule]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RULES_HEADER)?;
    for (i, r) in rules.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.antecedent.join(";"),
            r.consequent.join(";"),
            r.antecedent_support.to_string(),
            r.consequent_support.to_string(),
            r.support.to_string(),
            r.confidence.to_string(),
            r.lift.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
