//! Per-script operator relationship chains: a small tree of sequential,
//! parallel and nested groups over operator names, with a text form that
//! parses back to the same tree.

mod parse;

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::ast::SyntaxTree;
use crate::error::{Error, Result};
use crate::relations::{self, OperatorOccurrence};

pub use parse::{chain_tokens, parse_chain};

/// A chain node. Build values through [`Chain::seq`], [`Chain::par`] and
/// [`Chain::nest`] so that the flattening and ordering invariants hold.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Chain {
    Leaf(String),
    /// Two or more steps, none of which is itself a `Seq`.
    Seq(Vec<Chain>),
    /// Two or more branches sorted by their serialization, none of which is
    /// itself a `Par`.
    Par(Vec<Chain>),
    Nest {
        head: String,
        body: Box<Chain>,
    },
}

impl Chain {
    pub fn leaf(name: impl Into<String>) -> Chain {
        Chain::Leaf(name.into())
    }

    /// Sequence of `parts`, flattening nested sequences. Returns `None` when
    /// there is nothing to sequence and the part itself when there is one.
    pub fn seq(parts: impl IntoIterator<Item = Chain>) -> Option<Chain> {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Chain::Seq(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => None,
            1 => out.pop(),
            _ => Some(Chain::Seq(out)),
        }
    }

    /// Parallel group of `branches`, flattening nested groups and sorting
    /// branches into canonical order.
    pub fn par(branches: impl IntoIterator<Item = Chain>) -> Option<Chain> {
        let mut out = Vec::new();
        for b in branches {
            match b {
                Chain::Par(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => None,
            1 => out.pop(),
            _ => {
                let mut keyed: Vec<(String, Chain)> =
                    out.into_iter().map(|c| (c.to_string(), c)).collect();
                keyed.sort_by(|a, b| a.0.cmp(&b.0));
                Some(Chain::Par(keyed.into_iter().map(|(_, c)| c).collect()))
            }
        }
    }

    pub fn nest(head: impl Into<String>, body: Chain) -> Chain {
        Chain::Nest {
            head: head.into(),
            body: Box::new(body),
        }
    }

    /// Operator names in serialized order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Chain::Leaf(name) => out.push(name),
            Chain::Seq(parts) | Chain::Par(parts) => {
                for p in parts {
                    p.collect_leaves(out);
                }
            }
            Chain::Nest { head, body } => {
                out.push(head);
                body.collect_leaves(out);
            }
        }
    }

    /// Checks the structural invariants. Values built through the
    /// constructors or [`parse_chain`] always pass.
    pub fn is_canonical(&self) -> bool {
        match self {
            Chain::Leaf(name) => parse::is_opname(name),
            Chain::Seq(parts) => {
                parts.len() >= 2
                    && parts
                        .iter()
                        .all(|p| !matches!(p, Chain::Seq(_)) && p.is_canonical())
            }
            Chain::Par(branches) => {
                branches.len() >= 2
                    && branches
                        .iter()
                        .all(|b| !matches!(b, Chain::Par(_)) && b.is_canonical())
                    && branches
                        .windows(2)
                        .all(|w| w[0].to_string() <= w[1].to_string())
            }
            Chain::Nest { head, body } => parse::is_opname(head) && body.is_canonical(),
        }
    }

    /// Text form with `->` for nesting edges as well as sequence edges. The
    /// result cannot always be parsed back.
    pub fn plain_arrows(&self) -> String {
        let mut s = String::new();
        write_chain(&mut s, self, "->").expect("writing to a String cannot fail");
        s
    }
}

fn write_chain(out: &mut impl fmt::Write, chain: &Chain, nest_arrow: &str) -> fmt::Result {
    match chain {
        Chain::Leaf(name) => out.write_str(name),
        Chain::Seq(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.write_str(" -> ")?;
                }
                write_chain(out, p, nest_arrow)?;
            }
            Ok(())
        }
        Chain::Par(branches) => {
            out.write_str("{")?;
            for b in branches {
                out.write_str(" ")?;
                write_chain(out, b, nest_arrow)?;
            }
            out.write_str(" }")
        }
        Chain::Nest { head, body } => {
            write!(out, "{head} {nest_arrow} {{ ")?;
            write_chain(out, body, nest_arrow)?;
            out.write_str(" }")
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_chain(f, self, "~>")
    }
}

pub fn serialize(chain: &Chain) -> String {
    chain.to_string()
}

/// Builds the chain of a parsed script from its operator occurrences.
pub fn build_chain(tree: &SyntaxTree, occs: &[OperatorOccurrence]) -> Result<Chain> {
    relations::analyze(tree, occs, relations::ParallelRule::Dataflow)
        .chain
        .ok_or(Error::EmptyChain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChainStyle {
    #[default]
    Canonical,
    PlainArrows,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainRecord {
    pub script_name: String,
    pub chain: Chain,
}

#[derive(Deserialize)]
struct ChainRow {
    script_name: String,
    chain: String,
}

pub fn write_chains_csv(path: &Path, records: &[ChainRecord], style: ChainStyle) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    // Writing the header explicitly keeps it present for an empty table.
    w.write_record(["script_name", "chain"])?;
    for r in records {
        let text = match style {
            ChainStyle::Canonical => r.chain.to_string(),
            ChainStyle::PlainArrows => r.chain.plain_arrows(),
        };
        w.write_record([r.script_name.as_str(), text.as_str()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `script_name,chain` table without interpreting the chain text,
/// so that tables written in either style can be loaded.
pub fn read_chains_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["script_name", "chain"] {
        return Err(Error::Schema {
            row: 1,
            message: format!(
                "expected header script_name,chain, found {}",
                join(&headers)
            ),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<ChainRow>().enumerate() {
        let row = row.map_err(|e| Error::Schema {
            row: i + 2,
            message: e.to_string(),
        })?;
        out.push((row.script_name, row.chain));
    }
    Ok(out)
}

pub(crate) fn join(record: &csv::StringRecord) -> String {
    record.iter().collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Chain {
        Chain::leaf(s)
    }

    #[test]
    fn seq_with_par_serializes_with_braces() {
        let c = Chain::seq([l("A"), Chain::par([l("C"), l("B")]).unwrap()]).unwrap();
        assert_eq!(c.to_string(), "A -> { B C }");
    }

    #[test]
    fn leaf_serializes_as_its_name() {
        assert_eq!(l("ee.Image").to_string(), "ee.Image");
    }

    #[test]
    fn nest_uses_its_own_arrow() {
        let c = Chain::nest("map", l("normalizedDifference"));
        assert_eq!(c.to_string(), "map ~> { normalizedDifference }");
        assert_eq!(c.plain_arrows(), "map -> { normalizedDifference }");
    }

    #[test]
    fn constructors_flatten() {
        let inner = Chain::seq([l("a"), l("b")]).unwrap();
        let c = Chain::seq([inner, l("c")]).unwrap();
        assert_eq!(c, Chain::Seq(vec![l("a"), l("b"), l("c")]));

        let inner = Chain::par([l("y"), l("x")]).unwrap();
        let c = Chain::par([l("z"), inner]).unwrap();
        assert_eq!(c, Chain::Par(vec![l("x"), l("y"), l("z")]));
        assert!(c.is_canonical());

        assert_eq!(Chain::seq([]), None);
        assert_eq!(Chain::par([l("q")]), Some(l("q")));
    }

    #[test]
    fn leaves_in_serialized_order() {
        let c = Chain::seq([
            l("a"),
            Chain::nest("m", Chain::par([l("c"), l("b")]).unwrap()),
        ])
        .unwrap();
        assert_eq!(c.leaves(), ["a", "m", "b", "c"]);
    }
}
