use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

const ROOT: usize = 0;

pub(super) struct Limits {
    pub min_count: u64,
    pub max_len: usize,
    /// Most itemsets one mining pass may produce.
    pub budget: usize,
}

/// The itemset budget ran out.
#[derive(Debug)]
pub(super) struct Overflow;

struct Node {
    item: u32,
    count: u64,
    parent: usize,
}

/// Prefix tree over item ids; lower ids are more frequent and sit nearer
/// the root.
pub(super) struct FpTree {
    nodes: Vec<Node>,
    children: HashMap<(usize, u32), usize>,
    /// Node indices per item id.
    header: Vec<Vec<usize>>,
}

impl FpTree {
    pub(super) fn new(n_items: usize) -> FpTree {
        FpTree {
            nodes: vec![Node {
                item: u32::MAX,
                count: 0,
                parent: ROOT,
            }],
            children: HashMap::new(),
            header: vec![Vec::new(); n_items],
        }
    }

    /// Inserts a path; `items` must be ascending.
    pub(super) fn insert(&mut self, items: &[u32], count: u64) {
        let mut at = ROOT;
        for &item in items {
            at = match self.children.get(&(at, item)) {
                Some(&child) => child,
                None => {
                    let idx = self.nodes.len();
                    self.nodes.push(Node {
                        item,
                        count: 0,
                        parent: at,
                    });
                    self.children.insert((at, item), idx);
                    self.header[item as usize].push(idx);
                    idx
                }
            };
            self.nodes[at].count += count;
        }
    }

    fn item_count(&self, item: u32) -> u64 {
        self.header[item as usize]
            .iter()
            .map(|&n| self.nodes[n].count)
            .sum()
    }

    /// Conditional tree of `item`: the prefix paths above each of its
    /// nodes, restricted to items that stay frequent.
    fn conditional(&self, item: u32, min_count: u64) -> Option<FpTree> {
        let mut paths = Vec::new();
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &n in &self.header[item as usize] {
            let weight = self.nodes[n].count;
            let mut path = Vec::new();
            let mut at = self.nodes[n].parent;
            while at != ROOT {
                path.push(self.nodes[at].item);
                *counts.entry(self.nodes[at].item).or_insert(0) += weight;
                at = self.nodes[at].parent;
            }
            path.reverse();
            paths.push((path, weight));
        }
        counts.retain(|_, c| *c >= min_count);
        if counts.is_empty() {
            return None;
        }
        let mut tree = FpTree::new(self.header.len());
        for (mut path, weight) in paths {
            path.retain(|i| counts.contains_key(i));
            if !path.is_empty() {
                tree.insert(&path, weight);
            }
        }
        Some(tree)
    }

    fn mine_item(
        &self,
        item: u32,
        prefix: &mut Vec<u32>,
        lim: &Limits,
        found: &AtomicUsize,
        out: &mut Vec<(Vec<u32>, u64)>,
    ) -> Result<(), Overflow> {
        let support = self.item_count(item);
        if support < lim.min_count {
            return Ok(());
        }
        if found.fetch_add(1, Ordering::Relaxed) >= lim.budget {
            return Err(Overflow);
        }
        prefix.push(item);
        out.push((prefix.clone(), support));
        let mut result = Ok(());
        if prefix.len() < lim.max_len {
            if let Some(cond) = self.conditional(item, lim.min_count) {
                result = cond.mine(prefix, lim, found, out);
            }
        }
        prefix.pop();
        result
    }

    /// Appends every frequent itemset extending `prefix` to `out`.
    pub(super) fn mine(
        &self,
        prefix: &mut Vec<u32>,
        lim: &Limits,
        found: &AtomicUsize,
        out: &mut Vec<(Vec<u32>, u64)>,
    ) -> Result<(), Overflow> {
        for item in (0..self.header.len() as u32).rev() {
            if !self.header[item as usize].is_empty() {
                self.mine_item(item, prefix, lim, found, out)?;
            }
        }
        Ok(())
    }

    /// Same result set as [`FpTree::mine`] from an empty prefix, with one
    /// task per top-level item.
    pub(super) fn mine_parallel(&self, lim: &Limits) -> Result<Vec<(Vec<u32>, u64)>, Overflow> {
        let found = AtomicUsize::new(0);
        let parts: Vec<Result<Vec<_>, Overflow>> = (0..self.header.len() as u32)
            .into_par_iter()
            .filter(|&i| !self.header[i as usize].is_empty())
            .map(|item| {
                let mut out = Vec::new();
                self.mine_item(item, &mut Vec::new(), lim, &found, &mut out)?;
                Ok(out)
            })
            .collect();
        let mut out = Vec::new();
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}
