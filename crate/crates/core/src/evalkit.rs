//! Accuracy metrics for extracted relations and similarity metrics for
//! chains.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::chains::{chain_tokens, parse_chain, serialize};
use crate::error::{Error, Result};
use crate::relations::{Relation, ScriptRelation};
use crate::retrieval::{cosine, Embedder};

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub script_name: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

impl MetricRow {
    /// Metrics from confusion counts. Zero denominators give `None`.
    pub fn from_counts(script_name: impl Into<String>, tp: u64, fp: u64, fn_: u64) -> MetricRow {
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        MetricRow {
            script_name: script_name.into(),
            tp,
            fp,
            fn_,
            accuracy: ratio(tp, tp + fp + fn_),
            recall,
            precision,
            f1,
        }
    }
}

/// Scores one script. Both inputs are treated as sets.
pub fn score_relations<'a, P, T>(script_name: &str, predicted: P, truth: T) -> MetricRow
where
    P: IntoIterator<Item = &'a Relation>,
    T: IntoIterator<Item = &'a Relation>,
{
    let pred: BTreeSet<&Relation> = predicted.into_iter().collect();
    let truth: BTreeSet<&Relation> = truth.into_iter().collect();
    let tp = pred.intersection(&truth).count() as u64;
    MetricRow::from_counts(
        script_name,
        tp,
        pred.len() as u64 - tp,
        truth.len() as u64 - tp,
    )
}

/// Population standard deviation over the mean; `None` for an empty input
/// or a zero mean.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return None;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt() / mean)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LcsNorm {
    #[default]
    Max,
    Mean,
}

impl FromStr for LcsNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(LcsNorm::Max),
            "mean" => Ok(LcsNorm::Mean),
            other => Err(Error::Config(format!("unknown LCS normalizer `{other}`"))),
        }
    }
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS length over the longer (or mean) length; `None` when both are empty.
pub fn lcs_similarity<T: PartialEq>(a: &[T], b: &[T], norm: LcsNorm) -> Option<f64> {
    let den = match norm {
        LcsNorm::Max => a.len().max(b.len()) as f64,
        LcsNorm::Mean => (a.len() + b.len()) as f64 / 2.0,
    };
    (den > 0.0).then(|| lcs_len(a, b) as f64 / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramCoef {
    #[default]
    Dice,
    Jaccard,
}

impl FromStr for NgramCoef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dice" => Ok(NgramCoef::Dice),
            "jaccard" => Ok(NgramCoef::Jaccard),
            other => Err(Error::Config(format!(
                "unknown n-gram coefficient `{other}`"
            ))),
        }
    }
}

fn char_ngrams(text: &str, n: usize) -> HashMap<&str, usize> {
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let mut grams = HashMap::new();
    for w in bounds.windows(n + 1) {
        *grams.entry(&text[w[0]..w[n]]).or_insert(0) += 1;
    }
    grams
}

/// Similarity of the character n-gram multisets. `None` when neither text
/// has an n-gram.
pub fn ngram_similarity(a: &str, b: &str, n: usize, coef: NgramCoef) -> Option<f64> {
    let n = n.max(1);
    let ga = char_ngrams(a, n);
    let gb = char_ngrams(b, n);
    let size_a: usize = ga.values().sum();
    let size_b: usize = gb.values().sum();
    if size_a + size_b == 0 {
        return None;
    }
    let common: usize = ga
        .iter()
        .map(|(g, &c)| c.min(gb.get(g).copied().unwrap_or(0)))
        .sum();
    Some(match coef {
        NgramCoef::Dice => 2.0 * common as f64 / (size_a + size_b) as f64,
        NgramCoef::Jaccard => common as f64 / (size_a + size_b - common) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedScore {
    pub score: f64,
    pub embedder: String,
}

pub fn embedding_similarity(embedder: &dyn Embedder, a: &str, b: &str) -> Result<TaggedScore> {
    let v = embedder.embed_batch(&[a.to_string(), b.to_string()])?;
    Ok(TaggedScore {
        score: cosine(&v[0], &v[1]),
        embedder: embedder.tag(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub rows: Vec<MetricRow>,
    pub mean: Summary,
    pub cv: Summary,
}

fn summarize<T>(rows: &[T], get: impl Fn(&T) -> Option<f64>) -> (Option<f64>, Option<f64>) {
    let vals: Vec<f64> = rows.iter().filter_map(get).collect();
    (mean(&vals), coefficient_of_variation(&vals))
}

impl RelationReport {
    pub fn new(rows: Vec<MetricRow>) -> RelationReport {
        let (ma, ca) = summarize(&rows, |r| r.accuracy);
        let (mr, cr) = summarize(&rows, |r| r.recall);
        let (mp, cp) = summarize(&rows, |r| r.precision);
        let (mf, cf) = summarize(&rows, |r| r.f1);
        RelationReport {
            rows,
            mean: Summary {
                accuracy: ma,
                recall: mr,
                precision: mp,
                f1: mf,
            },
            cv: Summary {
                accuracy: ca,
                recall: cr,
                precision: cp,
                f1: cf,
            },
        }
    }
}

/// Scores every script in `truth`. Scripts only in `predicted` are ignored.
pub fn evaluate_relations(
    predicted: &[ScriptRelation],
    truth: &[ScriptRelation],
) -> RelationReport {
    let group = |rows: &[ScriptRelation]| {
        let mut m: BTreeMap<String, Vec<Relation>> = BTreeMap::new();
        for r in rows {
            m.entry(r.script_name.clone())
                .or_default()
                .push(r.relation.clone());
        }
        m
    };
    let pred = group(predicted);
    let truth = group(truth);
    for name in pred.keys().filter(|k| !truth.contains_key(*k)) {
        warn!("{name} has predictions but no ground truth; skipped");
    }
    let empty = Vec::new();
    let rows = truth
        .iter()
        .map(|(name, t)| score_relations(name, pred.get(name).unwrap_or(&empty), t))
        .collect();
    RelationReport::new(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEvalConfig {
    pub ngram_n: usize,
    pub ngram_coef: NgramCoef,
    pub lcs_norm: LcsNorm,
}

impl Default for ChainEvalConfig {
    fn default() -> Self {
        ChainEvalConfig {
            ngram_n: 3,
            ngram_coef: NgramCoef::Dice,
            lcs_norm: LcsNorm::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub script_name: String,
    pub lcs: Option<f64>,
    pub ngram: Option<f64>,
    pub embedding: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub lcs: Option<f64>,
    pub ngram: Option<f64>,
    pub embedding: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub config: ChainEvalConfig,
    pub embedder: Option<String>,
    pub rows: Vec<ChainRow>,
    pub mean: ChainSummary,
    pub cv: ChainSummary,
}

/// Canonical text when the chain parses, the trimmed input otherwise.
fn normalized_chain(text: &str) -> String {
    match parse_chain(text) {
        Ok(c) => serialize(&c),
        Err(_) => text.trim().to_string(),
    }
}

/// Compares predicted and reference chains per script. Scripts missing a
/// prediction are scored against an empty chain.
pub fn evaluate_chains(
    predicted: &[(String, String)],
    truth: &[(String, String)],
    cfg: &ChainEvalConfig,
    embedder: Option<&dyn Embedder>,
) -> Result<ChainReport> {
    let pred: HashMap<&str, &str> = predicted
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    let mut truth: Vec<&(String, String)> = truth.iter().collect();
    truth.sort();
    let mut rows = Vec::with_capacity(truth.len());
    for (name, t) in truth {
        let p = normalized_chain(pred.get(name.as_str()).copied().unwrap_or(""));
        let t = normalized_chain(t);
        let embedding = match embedder {
            Some(e) if !p.is_empty() && !t.is_empty() => {
                Some(embedding_similarity(e, &p, &t)?.score)
            }
            Some(_) => Some(0.0),
            None => None,
        };
        rows.push(ChainRow {
            script_name: name.clone(),
            lcs: lcs_similarity(&chain_tokens(&p), &chain_tokens(&t), cfg.lcs_norm),
            ngram: ngram_similarity(&p, &t, cfg.ngram_n, cfg.ngram_coef),
            embedding,
        });
    }
    let (ml, cl) = summarize(&rows, |r| r.lcs);
    let (mn, cn) = summarize(&rows, |r| r.ngram);
    let (me, ce) = summarize(&rows, |r| r.embedding);
    Ok(ChainReport {
        config: *cfg,
        embedder: embedder.map(|e| e.tag()),
        rows,
        mean: ChainSummary {
            lcs: ml,
            ngram: mn,
            embedding: me,
        },
        cv: ChainSummary {
            lcs: cl,
            ngram: cn,
            embedding: ce,
        },
    })
}

/// Two-decimal rendering used in printed reports.
pub fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}
