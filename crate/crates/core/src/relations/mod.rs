//! Operator occurrences, the pairwise relationships between them, and
//! corpus-wide relationship counts.

mod structure;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ast::{NodeId, NodeKind, SyntaxTree};
use crate::chains::Chain;
use crate::error::{Error, Result};

/// Namespace roots whose calls keep their full dotted path as the name.
pub const NAMESPACES: [&str; 5] = ["ee", "Map", "Export", "Chart", "ui"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorOccurrence {
    pub canonical_name: String,
    pub short_name: String,
    /// The statement-level node that owns the call.
    pub stmt_id: NodeId,
    /// Evaluation order of the call within its statement.
    pub order_in_stmt: usize,
    pub depth: usize,
    pub span: (usize, usize),
    pub call_node: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relationship {
    Sequential,
    Parallel,
    Nested,
}

impl Relationship {
    pub fn as_str(self) -> &'static str {
        match self {
            Relationship::Sequential => "sequential",
            Relationship::Parallel => "parallel",
            Relationship::Nested => "nested",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Relationship::Sequential),
            "parallel" => Ok(Relationship::Parallel),
            "nested" => Ok(Relationship::Nested),
            other => Err(Error::Argument(format!("unknown relationship `{other}`"))),
        }
    }
}

/// One relation instance between two operator occurrences, named by their
/// canonical names. Parallel instances put the smaller name first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub operator: String,
    pub related_operator: String,
    pub relationship: Relationship,
}

impl Relation {
    pub fn new(a: &str, b: &str, relationship: Relationship) -> Relation {
        let (a, b) = if relationship == Relationship::Parallel && b < a {
            (b, a)
        } else {
            (a, b)
        };
        Relation {
            operator: a.to_string(),
            related_operator: b.to_string(),
            relationship,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorRelation {
    pub operator: String,
    pub related_operator: String,
    pub relationship: Relationship,
    pub frequency: u64,
}

/// How sibling statements are judged independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParallelRule {
    /// No def-use path connects the siblings.
    #[default]
    Dataflow,
    /// The siblings' operator name sets do not intersect.
    Intersection,
}

impl FromStr for ParallelRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataflow" => Ok(ParallelRule::Dataflow),
            "intersection" => Ok(ParallelRule::Intersection),
            other => Err(Error::Config(format!("unknown parallel rule `{other}`"))),
        }
    }
}

impl fmt::Display for ParallelRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParallelRule::Dataflow => "dataflow",
            ParallelRule::Intersection => "intersection",
        })
    }
}

enum Callee {
    Static(Vec<String>),
    Method(String),
    Dynamic,
}

fn callee_path(tree: &SyntaxTree, id: NodeId) -> Callee {
    let node = tree.node(id);
    match node.kind {
        NodeKind::Identifier => match &node.name {
            Some(name) => Callee::Static(vec![name.clone()]),
            None => Callee::Dynamic,
        },
        NodeKind::MemberExpression => {
            let (Some(prop), Some(&object)) = (&node.name, node.children.first()) else {
                return Callee::Dynamic;
            };
            match callee_path(tree, object) {
                Callee::Static(mut path) => {
                    path.push(prop.clone());
                    Callee::Static(path)
                }
                _ => Callee::Method(prop.clone()),
            }
        }
        _ => Callee::Dynamic,
    }
}

/// Canonical and short name of a call, or `None` when the callee is not a
/// plain identifier or property access (computed members, call results,
/// immediately invoked functions).
pub fn call_names(tree: &SyntaxTree, call: NodeId) -> Option<(String, String)> {
    let callee = *tree.node(call).children.first()?;
    match callee_path(tree, callee) {
        Callee::Static(path) => {
            let short = path.last().cloned()?;
            let canonical = if NAMESPACES.contains(&path[0].as_str()) {
                path.join(".")
            } else {
                short.clone()
            };
            Some((canonical, short))
        }
        Callee::Method(name) => Some((name.clone(), name)),
        Callee::Dynamic => None,
    }
}

/// Number of calls whose callee cannot be named statically. These calls
/// produce no occurrences.
pub fn dynamic_call_count(tree: &SyntaxTree) -> usize {
    tree.nodes
        .iter()
        .filter(|n| n.kind == NodeKind::CallExpression && call_names(tree, n.id).is_none())
        .count()
}

pub fn extract_occurrences(tree: &SyntaxTree) -> Vec<OperatorOccurrence> {
    let index = structure::StmtIndex::new(tree);
    let mut found: Vec<(NodeId, usize, NodeId)> = Vec::new();
    for (pos, id) in postorder(tree).into_iter().enumerate() {
        if tree.node(id).kind != NodeKind::CallExpression {
            continue;
        }
        if let Some(stmt) = index.stmt_of[id] {
            found.push((stmt, pos, id));
        }
    }
    found.sort_unstable();

    let mut occs: Vec<OperatorOccurrence> = Vec::with_capacity(found.len());
    for (stmt, _, id) in found {
        let Some((canonical_name, short_name)) = call_names(tree, id) else {
            continue;
        };
        let order_in_stmt = match occs.last() {
            Some(prev) if prev.stmt_id == stmt => prev.order_in_stmt + 1,
            _ => 0,
        };
        occs.push(OperatorOccurrence {
            canonical_name,
            short_name,
            stmt_id: stmt,
            order_in_stmt,
            depth: index.depth[id],
            span: tree.node(id).span,
            call_node: id,
        });
    }
    occs
}

/// Children before parents, siblings in source order: the order in which
/// the calls of an expression are evaluated.
fn postorder(tree: &SyntaxTree) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(tree.len());
    let mut stack = vec![(tree.root, false)];
    while let Some((id, expanded)) = stack.pop() {
        if expanded {
            out.push(id);
        } else {
            stack.push((id, true));
            for &c in tree.node(id).children.iter().rev() {
                stack.push((c, false));
            }
        }
    }
    out
}

/// Relations and chain of one script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptAnalysis {
    pub relations: Vec<Relation>,
    pub chain: Option<Chain>,
}

/// Classifies relations and builds the chain in one pass over the
/// statement structure. `occs` must come from [`extract_occurrences`] on the
/// same tree.
pub fn analyze(
    tree: &SyntaxTree,
    occs: &[OperatorOccurrence],
    rule: ParallelRule,
) -> ScriptAnalysis {
    structure::analyze(tree, occs, rule)
}

pub fn classify_relations(
    tree: &SyntaxTree,
    occs: &[OperatorOccurrence],
    rule: ParallelRule,
) -> Vec<Relation> {
    analyze(tree, occs, rule).relations
}

/// Relation counts that can be filled from several workers and merged.
#[derive(Debug, Clone, Default)]
pub struct RelationCounts {
    counts: HashMap<Relation, u64>,
}

impl RelationCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, relations: impl IntoIterator<Item = Relation>) {
        for r in relations {
            *self.counts.entry(r).or_insert(0) += 1;
        }
    }

    pub fn merge(mut self, other: RelationCounts) -> RelationCounts {
        if self.counts.len() < other.counts.len() {
            return other.merge(self);
        }
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
        self
    }

    /// Rows ordered by relationship name, then frequency descending, then
    /// operator names.
    pub fn into_sorted(self) -> Vec<OperatorRelation> {
        let mut rows: Vec<OperatorRelation> = self
            .counts
            .into_iter()
            .map(|(r, frequency)| OperatorRelation {
                operator: r.operator,
                related_operator: r.related_operator,
                relationship: r.relationship,
                frequency,
            })
            .collect();
        rows.sort_by(|a, b| {
            a.relationship
                .as_str()
                .cmp(b.relationship.as_str())
                .then(b.frequency.cmp(&a.frequency))
                .then_with(|| a.operator.cmp(&b.operator))
                .then_with(|| a.related_operator.cmp(&b.related_operator))
        });
        rows
    }
}

pub fn aggregate<I, S>(streams: I) -> Vec<OperatorRelation>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = Relation>,
{
    let mut counts = RelationCounts::new();
    for s in streams {
        counts.add(s);
    }
    counts.into_sorted()
}

const RELATIONS_HEADER: [&str; 5] = [
    "index",
    "operator",
    "related_operator",
    "relationship",
    "frequency",
];

pub fn write_relations_csv(path: &Path, rows: &[OperatorRelation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RELATIONS_HEADER)?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            (i + 1).to_string().as_str(),
            &r.operator,
            &r.related_operator,
            r.relationship.as_str(),
            &r.frequency.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_relations_csv(path: &Path) -> Result<Vec<OperatorRelation>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&r.headers()?.clone(), &RELATIONS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let relationship = field(3).parse().map_err(|e: Error| Error::Schema {
            row,
            message: e.to_string(),
        })?;
        let frequency = field(4).parse().map_err(|_| Error::Schema {
            row,
            message: format!("frequency `{}` is not a positive integer", field(4)),
        })?;
        out.push(OperatorRelation {
            operator: field(1).to_string(),
            related_operator: field(2).to_string(),
            relationship,
            frequency,
        });
    }
    Ok(out)
}

/// A relation attributed to a script, as used by per-script prediction and
/// ground-truth tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScriptRelation {
    pub script_name: String,
    pub relation: Relation,
}

const SCRIPT_RELATIONS_HEADER: [&str; 4] = [
    "script_name",
    "operator",
    "related_operator",
    "relationship",
];

pub fn write_script_relations_csv(path: &Path, rows: &[ScriptRelation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SCRIPT_RELATIONS_HEADER)?;
    for r in rows {
        w.write_record([
            r.script_name.as_str(),
            &r.relation.operator,
            &r.relation.related_operator,
            r.relation.relationship.as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `script_name,operator,related_operator,relationship` table.
/// Parallel rows are canonicalized on load.
pub fn read_script_relations_csv(path: &Path) -> Result<Vec<ScriptRelation>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(&r.headers()?.clone(), &SCRIPT_RELATIONS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        if field(0).is_empty() || field(1).is_empty() || field(2).is_empty() {
            return Err(Error::Schema {
                row,
                message: "empty script_name or operator".into(),
            });
        }
        let relationship = field(3).parse().map_err(|e: Error| Error::Schema {
            row,
            message: e.to_string(),
        })?;
        out.push(ScriptRelation {
            script_name: field(0).to_string(),
            relation: Relation::new(field(1), field(2), relationship),
        });
    }
    Ok(out)
}

pub(crate) fn check_header(found: &csv::StringRecord, want: &[&str]) -> Result<()> {
    if found.iter().collect::<Vec<_>>() != want {
        return Err(Error::Schema {
            row: 1,
            message: format!(
                "expected header {}, found {}",
                want.join(","),
                crate::chains::join(found)
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_source, ParseOptions};

    fn tree(src: &str) -> SyntaxTree {
        parse_source("t", src, &ParseOptions::default()).unwrap()
    }

    fn names(src: &str) -> Vec<String> {
        extract_occurrences(&tree(src))
            .into_iter()
            .map(|o| o.canonical_name)
            .collect()
    }

    #[test]
    fn method_call_uses_short_name() {
        let occs =
            extract_occurrences(&tree("var ndvi = image.normalizedDifference(['B5','B4']);"));
        assert_eq!(occs.len(), 1);
        assert_eq!(occs[0].short_name, "normalizedDifference");
        assert_eq!(occs[0].canonical_name, "normalizedDifference");
        assert_eq!(occs[0].order_in_stmt, 0);
    }

    #[test]
    fn no_calls_no_occurrences() {
        assert!(names("var a = 1;").is_empty());
    }

    #[test]
    fn arguments_evaluate_before_the_call() {
        assert_eq!(names("a(b(), c());"), ["b", "c", "a"]);
    }

    #[test]
    fn namespace_calls_keep_their_path() {
        assert_eq!(
            names("Export.image.toDrive(ee.Image(1).select('a')); foo.bar.baz();"),
            ["ee.Image", "select", "Export.image.toDrive", "baz"]
        );
        assert_eq!(names("new ee.Image(1);"), ["ee.Image"]);
    }

    #[test]
    fn dynamic_callees_are_skipped() {
        let t = tree("obj[k](); f()(); (function () { g(); })();");
        assert_eq!(dynamic_call_count(&t), 3);
        let got: Vec<_> = extract_occurrences(&t)
            .into_iter()
            .map(|o| o.canonical_name)
            .collect();
        assert_eq!(got, ["f", "g"]);
    }

    #[test]
    fn occurrence_labels_are_dense_per_statement() {
        let occs = extract_occurrences(&tree("a(b()); c(); d(function () { e(); f(); });"));
        let labels: Vec<_> = occs.iter().map(|o| (o.stmt_id, o.order_in_stmt)).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        let mut by_stmt: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (s, o) in labels {
            by_stmt.entry(s).or_default().push(o);
        }
        for orders in by_stmt.values() {
            assert_eq!(*orders, (0..orders.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn parallel_relations_are_canonicalized() {
        let r = Relation::new("b", "a", Relationship::Parallel);
        assert_eq!(
            (r.operator.as_str(), r.related_operator.as_str()),
            ("a", "b")
        );
        let r = Relation::new("b", "a", Relationship::Sequential);
        assert_eq!(r.operator, "b");
    }

    #[test]
    fn aggregate_counts_and_sorts() {
        let s = |a: &str, b: &str, k| Relation::new(a, b, k);
        let rows = aggregate(vec![
            vec![s("a", "b", Relationship::Sequential)],
            vec![
                s("a", "b", Relationship::Sequential),
                s("x", "y", Relationship::Nested),
            ],
            vec![s("a", "b", Relationship::Sequential)],
        ]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].relationship, Relationship::Nested);
        assert_eq!(rows[1].frequency, 3);
        assert!(aggregate(Vec::<Vec<Relation>>::new()).is_empty());
    }
}
