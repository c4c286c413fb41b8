use std::path::PathBuf;

use opskb::evalkit::{
    coefficient_of_variation, embedding_similarity, evaluate_chains, evaluate_relations,
    lcs_similarity, ngram_similarity, score_relations, ChainEvalConfig, LcsNorm, MetricRow,
    NgramCoef,
};
use opskb::relations::{Relation, Relationship, ScriptRelation};
use opskb::retrieval::HashedEmbedder;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

struct CountsRow {
    name: String,
    counts: (u64, u64, u64),
    printed: [f64; 4],
}

fn count_rows() -> Vec<CountsRow> {
    let path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/per_script_counts.tsv");
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            let n = |i: usize| f[i].parse::<u64>().unwrap();
            let x = |i: usize| f[i].parse::<f64>().unwrap();
            CountsRow {
                name: f[0].to_string(),
                counts: (n(1), n(2), n(3)),
                printed: [x(4), x(5), x(6), x(7)],
            }
        })
        .collect()
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn row_metrics(r: &MetricRow) -> [f64; 4] {
    [
        r.accuracy.unwrap(),
        r.recall.unwrap(),
        r.precision.unwrap(),
        r.f1.unwrap(),
    ]
}

#[test]
fn reference_count_rows_reproduce() {
    let rows = count_rows();
    assert_eq!(rows.len(), 30);
    for t in &rows {
        let (tp, fp, fn_) = t.counts;
        let r = MetricRow::from_counts(&t.name, tp, fp, fn_);
        let got = row_metrics(&r);
        for (k, (g, p)) in got.iter().zip(t.printed).enumerate() {
            assert_eq!(round2(*g), p, "{} metric {k}: {g}", t.name);
        }
    }
}

#[test]
fn reference_coefficients_of_variation() {
    let rows: Vec<[f64; 4]> = count_rows()
        .iter()
        .map(|t| {
            row_metrics(&MetricRow::from_counts(
                &t.name, t.counts.0, t.counts.1, t.counts.2,
            ))
        })
        .collect();
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let cv_acc = coefficient_of_variation(&col(0)).unwrap();
    let cv_f1 = coefficient_of_variation(&col(3)).unwrap();
    assert!((cv_acc - 0.10).abs() <= 0.01, "{cv_acc}");
    assert!((cv_f1 - 0.05).abs() <= 0.01, "{cv_f1}");
    // Independent check of the population formula on the accuracy column.
    let xs = col(0);
    let m = xs.iter().sum::<f64>() / 30.0;
    let sd = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 30.0).sqrt();
    assert!((cv_acc - sd / m).abs() < 1e-12);
}

#[test]
fn printed_examples() {
    let r = MetricRow::from_counts("s", 5, 1, 0);
    let got: Vec<f64> = row_metrics(&r).iter().map(|&x| round2(x)).collect();
    assert_eq!(got, [0.83, 1.0, 0.83, 0.91]);
    let r = MetricRow::from_counts("s", 55, 3, 14);
    let got: Vec<f64> = row_metrics(&r).iter().map(|&x| round2(x)).collect();
    assert_eq!(got, [0.76, 0.8, 0.95, 0.87]);
}

fn rel(a: &str, b: &str, k: Relationship) -> Relation {
    Relation::new(a, b, k)
}

#[test]
fn relation_scoring_uses_sets() {
    use Relationship::*;
    let truth = [
        rel("a", "b", Sequential),
        rel("b", "c", Nested),
        rel("c", "d", Parallel),
    ];
    let pred = [
        rel("a", "b", Sequential),
        rel("a", "b", Sequential),
        rel("d", "c", Parallel),
        rel("x", "y", Sequential),
    ];
    let r = score_relations("s", &pred, &truth);
    assert_eq!((r.tp, r.fp, r.fn_), (2, 1, 1));

    let mut rng = StdRng::seed_from_u64(1);
    let mut shuffled = pred.to_vec();
    for _ in 0..10 {
        shuffled.shuffle(&mut rng);
        assert_eq!(score_relations("s", &shuffled, &truth), r);
    }
}

#[test]
fn per_script_report() {
    use Relationship::*;
    let sr = |s: &str, r: Relation| ScriptRelation {
        script_name: s.into(),
        relation: r,
    };
    let truth = vec![
        sr("a.js", rel("x", "y", Sequential)),
        sr("b.js", rel("x", "y", Nested)),
    ];
    let pred = vec![
        sr("a.js", rel("x", "y", Sequential)),
        sr("c.js", rel("x", "y", Sequential)),
    ];
    let report = evaluate_relations(&pred, &truth);
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.rows[0].f1, Some(1.0));
    assert_eq!((report.rows[1].tp, report.rows[1].fn_), (0, 1));
    assert_eq!(report.rows[1].precision, None);
    assert_eq!(report.mean.accuracy, Some(0.5));
    assert_eq!(report.mean.precision, Some(1.0));
    assert_eq!(report.cv.accuracy, Some(1.0));
}

/// Full-table LCS recurrence.
fn lcs_oracle(a: &[u8], b: &[u8]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

#[test]
fn lcs_matches_table_oracle() {
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..100 {
        let a: Vec<u8> = (0..rng.gen_range(0..25))
            .map(|_| rng.gen_range(0..6))
            .collect();
        let b: Vec<u8> = (0..rng.gen_range(1..25))
            .map(|_| rng.gen_range(0..6))
            .collect();
        let want = lcs_oracle(&a, &b) as f64 / a.len().max(b.len()) as f64;
        assert_eq!(lcs_similarity(&a, &b, LcsNorm::Max), Some(want));
    }
}

#[test]
fn chain_report() {
    let truth = vec![
        (
            "a.js".to_string(),
            "ee.Image -> clip -> Map.addLayer".to_string(),
        ),
        (
            "b.js".to_string(),
            "ee.Image -> { clip select }".to_string(),
        ),
    ];
    let pred = vec![
        (
            "a.js".to_string(),
            "ee.Image ->  clip -> Map.addLayer".to_string(),
        ),
        (
            "b.js".to_string(),
            "ee.Image -> { select clip }".to_string(),
        ),
    ];
    let e = HashedEmbedder::default();
    let report = evaluate_chains(&pred, &truth, &ChainEvalConfig::default(), Some(&e)).unwrap();
    // Whitespace and branch order are normalized before comparison.
    for row in &report.rows {
        assert_eq!(row.ngram, Some(1.0));
        assert!((row.embedding.unwrap() - 1.0).abs() < 1e-9);
    }
    // Token sequences differ in branch order only after canonicalization.
    assert_eq!(report.rows[0].lcs, Some(1.0));
    assert_eq!(report.cv.ngram, Some(0.0));
    assert!(report.embedder.unwrap().starts_with("hashed"));

    let missing = evaluate_chains(&[], &truth, &ChainEvalConfig::default(), None).unwrap();
    assert_eq!(missing.rows[0].lcs, Some(0.0));
    assert_eq!(missing.rows[0].ngram, Some(0.0));
    assert_eq!(missing.rows[0].embedding, None);
}

#[test]
fn embedding_similarity_is_symmetric() {
    let e = HashedEmbedder::default();
    let a = "ee.ImageCollection -> filterDate -> median";
    let b = "ee.Image -> normalizedDifference -> Map.addLayer";
    let ab = embedding_similarity(&e, a, b).unwrap();
    let ba = embedding_similarity(&e, b, a).unwrap();
    assert_eq!(ab.score, ba.score);
    assert!((embedding_similarity(&e, a, a).unwrap().score - 1.0).abs() < 1e-6);
    assert!(embedding_similarity(&e, "", a).is_err());
}

proptest! {
    #[test]
    fn f1_lies_between_precision_and_recall(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
        let r = MetricRow::from_counts("s", tp, fp, fn_);
        if let (Some(p), Some(rc), Some(f)) = (r.precision, r.recall, r.f1) {
            prop_assert!(p.min(rc) - 1e-12 <= f && f <= p.max(rc) + 1e-12);
        }
    }

    #[test]
    fn similarities_are_symmetric(a in "[a-c>{} -]{0,12}", b in "[a-c>{} -]{0,12}", n in 1usize..4) {
        prop_assert_eq!(ngram_similarity(&a, &b, n, NgramCoef::Dice), ngram_similarity(&b, &a, n, NgramCoef::Dice));
        prop_assert_eq!(ngram_similarity(&a, &b, n, NgramCoef::Jaccard), ngram_similarity(&b, &a, n, NgramCoef::Jaccard));
        let (ta, tb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(lcs_similarity(&ta, &tb, LcsNorm::Max), lcs_similarity(&tb, &ta, LcsNorm::Max));
        if let Some(s) = lcs_similarity(&ta, &tb, LcsNorm::Max) {
            prop_assert_eq!(s == 1.0, ta == tb);
        }
    }
}
