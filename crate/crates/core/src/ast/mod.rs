//! A normalized, language-agnostic view of parsed ECMAScript.
//!
//! The grammar-level tree produced by the parser is folded onto a small set
//! of node kinds; anything not listed maps to [`NodeKind::Other`] with its
//! children preserved.

mod build;

use std::fmt;
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{ScriptRecord, Stage};
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Program,
    VariableDeclaration,
    ExpressionStatement,
    CallExpression,
    MemberExpression,
    Identifier,
    FunctionExpression,
    IfStatement,
    ForStatement,
    WhileStatement,
    ReturnStatement,
    BlockStatement,
    Other,
}

impl NodeKind {
    pub fn is_control(self) -> bool {
        matches!(
            self,
            NodeKind::IfStatement | NodeKind::ForStatement | NodeKind::WhileStatement
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    /// Byte offsets `[start, end)` into the script text.
    pub span: (usize, usize),
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub script_id: String,
    pub root: NodeId,
    pub nodes: Vec<AstNode>,
}

impl SyntaxTree {
    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parent of every node; `None` for the root.
    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for n in &self.nodes {
            for &c in &n.children {
                parents[c] = Some(n.id);
            }
        }
        parents
    }

    /// Depth of every node (root = 0).
    pub fn depths(&self) -> Vec<usize> {
        let mut depths = vec![0; self.nodes.len()];
        for id in self.preorder() {
            for &c in &self.nodes[id].children {
                depths[c] = depths[id] + 1;
            }
        }
        depths
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        order
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("syntax tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tree: SyntaxTree = serde_json::from_str(text)?;
        tree.validate()?;
        Ok(tree)
    }

    /// Checks the structural invariants: ids are dense and match their
    /// position, the nodes form a single tree rooted at a `Program`, and
    /// children spans are nested in their parent and ordered without
    /// overlap.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Consistency(format!("{}: {msg}", self.script_id)));
        if self.root >= self.nodes.len() {
            return bad(format!("root {} out of range", self.root));
        }
        if self.nodes[self.root].kind != NodeKind::Program {
            return bad("root is not a Program".into());
        }
        let mut seen_as_child = vec![false; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return bad(format!("node at position {i} has id {}", n.id));
            }
            if n.span.0 > n.span.1 {
                return bad(format!("node {i} has inverted span"));
            }
            let mut prev_end = n.span.0;
            for &c in &n.children {
                let Some(child) = self.nodes.get(c) else {
                    return bad(format!("node {i} references missing child {c}"));
                };
                if c == self.root || std::mem::replace(&mut seen_as_child[c], true) {
                    return bad(format!("node {c} has more than one parent"));
                }
                if child.span.0 < prev_end || child.span.1 > n.span.1 {
                    return bad(format!(
                        "child {c} span escapes or overlaps within node {i}"
                    ));
                }
                prev_end = child.span.1;
            }
        }
        // Every node must be reachable from the root (no detached cycles).
        if self.preorder().len() != self.nodes.len() {
            return bad("nodes unreachable from root".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseFailure {
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    Timeout {
        limit_ms: u64,
    },
    /// The record was not in the `cleaned` stage.
    NotCleaned {
        stage: Stage,
    },
}

impl ParseFailure {
    /// Reason stored on a rejected record.
    pub fn reject_reason(&self) -> String {
        match self {
            ParseFailure::Syntax {
                line,
                column,
                message,
            } => format!("syntax at line {line}, column {column}: {message}"),
            ParseFailure::Timeout { .. } => "timeout".to_string(),
            ParseFailure::NotCleaned { stage } => format!("stage {stage}"),
        }
    }
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reject_reason())
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub timeout: Option<Duration>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            timeout: Some(Duration::from_secs(10)),
        }
    }
}

/// Parses source text into a normalized tree.
pub fn parse_source(
    script_id: &str,
    text: &str,
    opts: &ParseOptions,
) -> std::result::Result<SyntaxTree, ParseFailure> {
    let Some(limit) = opts.timeout else {
        return build::parse_text(script_id, text);
    };
    let (tx, rx) = mpsc::channel();
    let id = script_id.to_string();
    let src = text.to_string();
    std::thread::spawn(move || {
        let _ = tx.send(build::parse_text(&id, &src));
    });
    match rx.recv_timeout(limit) {
        Ok(result) => result,
        Err(mpsc::RecvTimeoutError::Timeout) => Err(ParseFailure::Timeout {
            limit_ms: limit.as_millis() as u64,
        }),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(ParseFailure::Syntax {
            line: 1,
            column: 1,
            message: "parser aborted".into(),
        }),
    }
}

/// Parses a cleaned record. On success the record becomes `validated`; on
/// failure it becomes `rejected` with the failure as its reason.
pub fn parse(
    record: &mut ScriptRecord,
    opts: &ParseOptions,
) -> std::result::Result<SyntaxTree, ParseFailure> {
    if record.stage != Stage::Cleaned {
        return Err(ParseFailure::NotCleaned {
            stage: record.stage,
        });
    }
    match parse_source(&record.script_id, &record.text, opts) {
        Ok(tree) => {
            record
                .advance(Stage::Validated)
                .expect("cleaned -> validated is a legal transition");
            Ok(tree)
        }
        Err(failure) => {
            record
                .reject(failure.reject_reason())
                .expect("cleaned -> rejected is a legal transition");
            Err(failure)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(src: &str) -> SyntaxTree {
        parse_source("t", src, &ParseOptions::default()).expect("parses")
    }

    fn kinds(t: &SyntaxTree) -> Vec<NodeKind> {
        t.preorder().into_iter().map(|id| t.node(id).kind).collect()
    }

    #[test]
    fn minimal_program() {
        let t = tree("var a = 1;");
        t.validate().unwrap();
        let k = kinds(&t);
        assert_eq!(k[0], NodeKind::Program);
        assert_eq!(k[1], NodeKind::VariableDeclaration);
        assert!(k.contains(&NodeKind::Identifier));
    }

    #[test]
    fn invalid_grammar_reports_position() {
        let err = parse_source("t", "var a = ;", &ParseOptions::default()).unwrap_err();
        match err {
            ParseFailure::Syntax { line, column, .. } => {
                assert_eq!((line, column), (1, 9));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_position_on_later_line() {
        let err =
            parse_source("t", "var a = 1;\nvar b = (;\n", &ParseOptions::default()).unwrap_err();
        let ParseFailure::Syntax { line, .. } = err else {
            panic!("expected syntax failure");
        };
        assert_eq!(line, 2);
    }

    #[test]
    fn record_transitions() {
        let mut ok = ScriptRecord::new("a", "a.js", "f();".into());
        ok.advance(Stage::Cleaned).unwrap();
        assert!(parse(&mut ok, &ParseOptions::default()).is_ok());
        assert_eq!(ok.stage, Stage::Validated);

        let mut bad = ScriptRecord::new("b", "b.js", "f(;".into());
        bad.advance(Stage::Cleaned).unwrap();
        assert!(parse(&mut bad, &ParseOptions::default()).is_err());
        assert_eq!(bad.stage, Stage::Rejected);
        assert!(bad.reject_reason.as_deref().unwrap().starts_with("syntax"));

        let mut raw = ScriptRecord::new("c", "c.js", "f();".into());
        assert!(matches!(
            parse(&mut raw, &ParseOptions::default()),
            Err(ParseFailure::NotCleaned { .. })
        ));
        assert_eq!(raw.stage, Stage::Raw);
    }

    #[test]
    fn member_call_shape() {
        let t = tree("image.normalizedDifference(['B5', 'B4']);");
        let call = t
            .nodes
            .iter()
            .find(|n| n.kind == NodeKind::CallExpression)
            .unwrap();
        let callee = t.node(call.children[0]);
        assert_eq!(callee.kind, NodeKind::MemberExpression);
        assert_eq!(callee.name.as_deref(), Some("normalizedDifference"));
        let object = t.node(callee.children[0]);
        assert_eq!(object.kind, NodeKind::Identifier);
        assert_eq!(object.name.as_deref(), Some("image"));
    }

    #[test]
    fn arrow_functions_normalize_to_function_expressions() {
        let t = tree("col.map(img => img.clip(geom));");
        assert!(t
            .nodes
            .iter()
            .any(|n| n.kind == NodeKind::FunctionExpression));
        // The expression body is wrapped in a block with one statement.
        let f = t
            .nodes
            .iter()
            .find(|n| n.kind == NodeKind::FunctionExpression)
            .unwrap();
        let body = t.node(*f.children.last().unwrap());
        assert_eq!(body.kind, NodeKind::BlockStatement);
    }

    #[test]
    fn unbraced_control_bodies_get_a_block() {
        let t = tree("if (a) f(); else if (b) g(); else h();\nwhile (x) y();\nfor (;;) z();");
        t.validate().unwrap();
        for n in &t.nodes {
            if n.kind.is_control() {
                let blocks = n
                    .children
                    .iter()
                    .filter(|&&c| t.node(c).kind == NodeKind::BlockStatement)
                    .count();
                assert!(blocks >= 1, "control node {n:?} lacks a body block");
            }
        }
    }

    #[test]
    fn shorthand_properties_do_not_overlap() {
        let t = tree("var {a, b: c} = obj; f({a, d});");
        t.validate().unwrap();
    }

    #[test]
    fn module_syntax_parses() {
        let t = tree("import x from 'y';\nexport var z = x();");
        t.validate().unwrap();
        assert_eq!(t.node(t.node(t.root).children[0]).kind, NodeKind::Other);
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let src = "var c = ee.ImageCollection('X').map(function (i) { return i.select('B4'); });";
        let a = tree(src);
        let b = tree(src);
        assert_eq!(a.to_json(), b.to_json());
        let back = SyntaxTree::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn from_json_rejects_broken_trees() {
        let mut t = tree("f(g());");
        t.nodes[1].children.push(0);
        assert!(SyntaxTree::from_json(&t.to_json()).is_err());

        let mut t = tree("f(g());");
        t.nodes[0].children.push(999);
        assert!(SyntaxTree::from_json(&t.to_json()).is_err());
    }

    #[test]
    fn json_schema_field_names() {
        let t = tree("f();");
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["script_id"], "t");
        assert_eq!(v["root"], 0);
        let n0 = &v["nodes"][0];
        for key in ["id", "kind", "children", "span", "name"] {
            assert!(n0.get(key).is_some(), "missing {key}");
        }
        assert!(n0["span"].is_array());
    }

    #[test]
    fn tiny_timeout_rejects_large_input() {
        let opts = ParseOptions {
            timeout: Some(Duration::from_nanos(1)),
        };
        let big = "f();\n".repeat(200_000);
        assert!(matches!(
            parse_source("t", &big, &opts),
            Err(ParseFailure::Timeout { .. })
        ));
    }
}
