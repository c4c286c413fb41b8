use std::collections::{BTreeMap, BTreeSet};

use opskb::miner::{
    build_transactions, derive_rules, fp_growth, mine_with_optimizations, Itemset, MinerConfig,
    Transaction,
};
use opskb::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn txns(sets: &[&[&str]]) -> Vec<Transaction> {
    sets.iter()
        .enumerate()
        .map(|(i, s)| Transaction::new(format!("t{i}"), s.iter().map(|x| x.to_string())))
        .collect()
}

fn cfg(min_support: f64) -> MinerConfig {
    MinerConfig {
        min_support,
        start_support: (min_support * 3.0).min(1.0),
        batch_size: 7,
        ..MinerConfig::default()
    }
}

/// Enumerates every subset of the item universe and counts it by scanning.
fn apriori_oracle(db: &[Transaction], min_support: f64) -> BTreeMap<Vec<String>, u64> {
    let universe: Vec<String> = db
        .iter()
        .flat_map(|t| t.items.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = db.len() as f64;
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << universe.len()) {
        let cand: Vec<String> = (0..universe.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| universe[i].clone())
            .collect();
        let count = db
            .iter()
            .filter(|t| cand.iter().all(|c| t.items.binary_search(c).is_ok()))
            .count() as u64;
        if count as f64 / n >= min_support {
            out.insert(cand, count);
        }
    }
    out
}

fn as_map(sets: &[Itemset]) -> BTreeMap<Vec<String>, u64> {
    sets.iter().map(|s| (s.items.clone(), s.count)).collect()
}

fn random_db(rng: &mut StdRng) -> Vec<Transaction> {
    let n_items = rng.gen_range(1..=12);
    let n_txns = rng.gen_range(1..=30);
    (0..n_txns)
        .map(|t| {
            let density = rng.gen_range(0.1..0.7);
            let mut items: Vec<String> = (0..n_items)
                .filter(|_| rng.gen_bool(density))
                .map(|i| format!("op{i}"))
                .collect();
            if items.is_empty() {
                items.push(format!("op{}", rng.gen_range(0..n_items)));
            }
            Transaction::new(format!("s{t:03}"), items)
        })
        .collect()
}

#[test]
fn four_transaction_example() {
    let db = txns(&[&["A", "B", "C"], &["A", "B"], &["A", "C"], &["B"]]);
    let got: Vec<(String, f64)> = fp_growth(&db, &cfg(0.5))
        .unwrap()
        .iter()
        .map(|s| (s.items.join(","), s.support()))
        .collect();
    let want = [
        ("A", 0.75),
        ("B", 0.75),
        ("C", 0.5),
        ("A,B", 0.5),
        ("A,C", 0.5),
    ];
    assert_eq!(got.len(), want.len());
    for ((g, gs), (w, ws)) in got.iter().zip(want) {
        assert_eq!(g, w);
        assert_eq!(*gs, ws);
    }

    let rules = derive_rules(&fp_growth(&db, &cfg(0.5)).unwrap(), 0.0).unwrap();
    let ab = rules
        .iter()
        .find(|r| r.antecedent == ["A"] && r.consequent == ["B"])
        .unwrap();
    assert_eq!(ab.support, 0.5);
    assert!((ab.confidence - 2.0 / 3.0).abs() < 1e-12);
    assert!((ab.lift - (2.0 / 3.0) / 0.75).abs() < 1e-12);
    // Two splits per 2-itemset.
    assert_eq!(rules.len(), 4);
}

#[test]
fn full_support_boundary() {
    let db = txns(&[&["X", "A"], &["X"], &["X", "B"]]);
    let sets = fp_growth(&db, &cfg(1.0)).unwrap();
    assert_eq!(sets.len(), 1);
    assert_eq!(sets[0].items, ["X"]);
    assert_eq!(sets[0].support(), 1.0);
}

#[test]
fn singleton_item_is_filtered_by_both_paths() {
    let mut sets: Vec<Vec<&str>> = (0..99).map(|_| vec!["common"]).collect();
    sets.push(vec!["common", "rare"]);
    let refs: Vec<&[&str]> = sets.iter().map(|v| v.as_slice()).collect();
    let db = txns(&refs);
    let c = MinerConfig::default();
    for out in [
        fp_growth(&db, &c).unwrap(),
        mine_with_optimizations(&db, &c).unwrap(),
    ] {
        assert!(out.iter().all(|s| !s.items.iter().any(|i| i == "rare")));
        assert_eq!(out.len(), 1);
    }
}

#[test]
fn both_paths_match_apriori_oracle() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for round in 0..200 {
        let db = random_db(&mut rng);
        let min_support = [0.1, 0.2, 0.3, 0.4, 0.5][rng.gen_range(0..5)];
        let want = apriori_oracle(&db, min_support);
        let c = cfg(min_support);
        let plain = fp_growth(&db, &c).unwrap();
        let fast = mine_with_optimizations(&db, &c).unwrap();
        assert_eq!(as_map(&plain), want, "round {round}");
        assert_eq!(plain, fast, "round {round}");
    }
}

#[test]
fn max_len_truncates_the_oracle() {
    let mut rng = StdRng::seed_from_u64(99);
    for round in 0..100 {
        let db = random_db(&mut rng);
        let max_len = rng.gen_range(1..=3);
        let want: BTreeMap<_, _> = apriori_oracle(&db, 0.2)
            .into_iter()
            .filter(|(k, _)| k.len() <= max_len)
            .collect();
        let c = MinerConfig {
            max_len: Some(max_len),
            ..cfg(0.2)
        };
        let plain = fp_growth(&db, &c).unwrap();
        assert_eq!(as_map(&plain), want, "round {round}");
        assert_eq!(
            mine_with_optimizations(&db, &c).unwrap(),
            plain,
            "round {round}"
        );
    }
}

#[test]
fn itemset_budget_is_a_config_error() {
    // One transaction over 20 items: every one of 2^20 - 1 subsets is frequent.
    let items: Vec<String> = (0..20).map(|i| format!("op{i}")).collect();
    let db = vec![Transaction::new("t", items)];
    let c = MinerConfig {
        max_itemsets: 10_000,
        ..cfg(0.5)
    };
    assert!(matches!(fp_growth(&db, &c), Err(Error::Config(_))));
    assert!(matches!(
        mine_with_optimizations(&db, &c),
        Err(Error::Config(_))
    ));
    let c = MinerConfig {
        max_len: Some(2),
        ..c
    };
    assert_eq!(fp_growth(&db, &c).unwrap().len(), 20 + 190);
}

#[test]
fn rule_budget_is_a_config_error() {
    let items: Vec<String> = (0..30).map(|i| format!("op{i}")).collect();
    let big = Itemset {
        items,
        count: 1,
        total: 1,
    };
    assert!(matches!(derive_rules(&[big], 0.5), Err(Error::Config(_))));
}

#[test]
fn optimized_path_ignores_floor_and_batch_size() {
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..50 {
        let db = random_db(&mut rng);
        let base = fp_growth(&db, &cfg(0.2)).unwrap();
        for (floor, batch) in [(0, 1), (1, 3), (1000, 1000), (5, 2)] {
            let c = MinerConfig {
                low_freq_floor: floor,
                batch_size: batch,
                ..cfg(0.2)
            };
            assert_eq!(mine_with_optimizations(&db, &c).unwrap(), base);
        }
    }
}

#[test]
fn independent_items_have_unit_lift() {
    // X in half the transactions, Y in a quarter, independently.
    let mut sets = Vec::new();
    for x in [true, false] {
        for y in [true, false, false, false] {
            let mut t = vec!["Z"];
            if x {
                t.push("X");
            }
            if y {
                t.push("Y");
            }
            sets.push(t);
        }
    }
    let refs: Vec<&[&str]> = sets.iter().map(|v| v.as_slice()).collect();
    let rules = derive_rules(&fp_growth(&txns(&refs), &cfg(0.1)).unwrap(), 0.0).unwrap();
    let xy = rules
        .iter()
        .find(|r| r.antecedent == ["X"] && r.consequent == ["Y"])
        .unwrap();
    assert!((xy.lift - 1.0).abs() < 1e-9);
}

#[test]
fn missing_subset_is_a_consistency_error() {
    let sets = vec![Itemset {
        items: vec!["A".into(), "B".into()],
        count: 2,
        total: 4,
    }];
    assert!(matches!(
        derive_rules(&sets, 0.0),
        Err(Error::Consistency(_))
    ));
}

#[test]
fn singletons_give_no_rules() {
    let db = txns(&[&["A"], &["B"]]);
    assert!(derive_rules(&fp_growth(&db, &cfg(0.5)).unwrap(), 0.0)
        .unwrap()
        .is_empty());
}

#[test]
fn transactions_match_sort_unique_oracle() {
    let mut rng = StdRng::seed_from_u64(3);
    let scripts: Vec<(String, Vec<String>)> = (0..20)
        .map(|i| {
            let n = rng.gen_range(0..8);
            let names = (0..n)
                .map(|_| format!("op{}", rng.gen_range(0..5)))
                .collect();
            (format!("script_{:02}", 19 - i), names)
        })
        .collect();
    let got = build_transactions(scripts.clone());
    let mut want: Vec<(String, Vec<String>)> = scripts
        .into_iter()
        .filter(|(_, n)| !n.is_empty())
        .map(|(id, mut n)| {
            n.sort();
            n.dedup();
            (id, n)
        })
        .collect();
    want.sort();
    let got: Vec<(String, Vec<String>)> = got.into_iter().map(|t| (t.txn_id, t.items)).collect();
    assert_eq!(got, want);
}

proptest! {
    #[test]
    fn rule_identities_and_antimonotonicity(
        db in prop::collection::vec(prop::collection::btree_set(0u8..8, 1..6), 1..25),
        min_support in 0.05f64..0.6,
    ) {
        let db: Vec<Transaction> = db
            .iter()
            .enumerate()
            .map(|(i, s)| Transaction::new(i.to_string(), s.iter().map(|x| format!("i{x}"))))
            .collect();
        let sets = mine_with_optimizations(&db, &cfg(min_support)).unwrap();
        let index = as_map(&sets);
        for s in &sets {
            // Support exactness by rescanning.
            let count = db
                .iter()
                .filter(|t| s.items.iter().all(|c| t.items.binary_search(c).is_ok()))
                .count() as u64;
            prop_assert_eq!(count, s.count);
            for skip in 0..s.items.len() {
                let mut sub = s.items.clone();
                sub.remove(skip);
                if !sub.is_empty() {
                    prop_assert!(index[&sub] >= s.count);
                }
            }
        }
        for r in derive_rules(&sets, 0.0).unwrap() {
            prop_assert!((r.confidence * r.antecedent_support - r.support).abs() < 1e-9);
            prop_assert!((r.lift * r.consequent_support - r.confidence).abs() < 1e-9);
            prop_assert!(r.support <= r.antecedent_support && r.support <= r.consequent_support);
            prop_assert!(r.antecedent.iter().all(|a| !r.consequent.contains(a)));
        }
    }
}
