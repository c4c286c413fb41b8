use std::panic::{catch_unwind, AssertUnwindSafe};

use oxc_allocator::Allocator;
use oxc_ast::ast::{
    ArrowFunctionBody, BindingProperty, DoWhileStatement, ForInStatement, ForOfStatement,
    ForStatement, IfStatement, ObjectProperty, Statement, StaticMemberExpression, WhileStatement,
};
use oxc_ast::AstKind;
use oxc_ast_visit::{walk, Visit};
use oxc_parser::Parser;
use oxc_span::{GetSpan, SourceType, Span};

use super::{AstNode, NodeKind, ParseFailure, SyntaxTree};

pub(super) fn parse_text(script_id: &str, text: &str) -> Result<SyntaxTree, ParseFailure> {
    catch_unwind(AssertUnwindSafe(|| parse_inner(script_id, text))).unwrap_or_else(|_| {
        Err(ParseFailure::Syntax {
            line: 1,
            column: 1,
            message: "parser panicked".into(),
        })
    })
}

fn parse_inner(script_id: &str, text: &str) -> Result<SyntaxTree, ParseFailure> {
    if text.len() > u32::MAX as usize {
        return Err(ParseFailure::Syntax {
            line: 1,
            column: 1,
            message: "input too large".into(),
        });
    }
    let allocator = Allocator::default();
    let ret = Parser::new(&allocator, text, SourceType::unambiguous())
        .with_options(oxc_parser::ParseOptions {
            preserve_parens: false,
            ..oxc_parser::ParseOptions::default()
        })
        .parse();

    if let Some(diag) = ret.diagnostics.errors().next() {
        let offset = diag
            .labels
            .first()
            .map(|l| l.offset() as usize)
            .unwrap_or(0);
        let (line, column) = line_column(text, offset);
        return Err(ParseFailure::Syntax {
            line,
            column,
            message: diag.message.to_string(),
        });
    }
    if ret.fatal_error {
        return Err(ParseFailure::Syntax {
            line: 1,
            column: 1,
            message: "unrecoverable syntax error".into(),
        });
    }

    let mut builder = Builder::default();
    builder.visit_program(&ret.program);
    Ok(builder.finish(script_id))
}

/// 1-based line and column (in characters) of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..floor_char_boundary(text, offset)];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let column = before[line_start..].chars().count() + 1;
    (line, column)
}

fn floor_char_boundary(text: &str, mut i: usize) -> usize {
    while !text.is_char_boundary(i) {
        i -= 1;
    }
    i
}

struct RawNode {
    kind: NodeKind,
    name: Option<String>,
    span: (usize, usize),
    children: Vec<usize>,
}

#[derive(Default)]
struct Builder {
    nodes: Vec<RawNode>,
    stack: Vec<usize>,
}

fn classify(kind: &AstKind<'_>) -> (NodeKind, Option<String>) {
    use NodeKind as K;
    match kind {
        AstKind::Program(_) => (K::Program, None),
        AstKind::VariableDeclaration(_) => (K::VariableDeclaration, None),
        AstKind::ExpressionStatement(_) => (K::ExpressionStatement, None),
        AstKind::CallExpression(_) | AstKind::NewExpression(_) => (K::CallExpression, None),
        AstKind::StaticMemberExpression(m) => (
            K::MemberExpression,
            Some(m.property.name.as_str().to_string()),
        ),
        AstKind::PrivateFieldExpression(m) => (
            K::MemberExpression,
            Some(format!("#{}", m.field.name.as_str())),
        ),
        AstKind::ComputedMemberExpression(_) => (K::MemberExpression, None),
        AstKind::IdentifierReference(i) => (K::Identifier, Some(i.name.as_str().to_string())),
        AstKind::BindingIdentifier(i) => (K::Identifier, Some(i.name.as_str().to_string())),
        AstKind::IdentifierName(i) => (K::Other, Some(i.name.as_str().to_string())),
        AstKind::LabelIdentifier(i) => (K::Other, Some(i.name.as_str().to_string())),
        AstKind::Function(_) | AstKind::ArrowFunctionExpression(_) => (K::FunctionExpression, None),
        AstKind::IfStatement(_) => (K::IfStatement, None),
        AstKind::ForStatement(_) | AstKind::ForInStatement(_) | AstKind::ForOfStatement(_) => {
            (K::ForStatement, None)
        }
        AstKind::WhileStatement(_) | AstKind::DoWhileStatement(_) => (K::WhileStatement, None),
        AstKind::ReturnStatement(_) => (K::ReturnStatement, None),
        AstKind::BlockStatement(_) | AstKind::FunctionBody(_) => (K::BlockStatement, None),
        _ => (K::Other, None),
    }
}

impl Builder {
    fn open(&mut self, kind: NodeKind, name: Option<String>, span: Span) {
        let id = self.nodes.len();
        self.nodes.push(RawNode {
            kind,
            name,
            span: (span.start as usize, span.end as usize),
            children: Vec::new(),
        });
        if let Some(&parent) = self.stack.last() {
            self.nodes[parent].children.push(id);
        }
        self.stack.push(id);
    }

    fn close(&mut self) {
        self.stack.pop();
    }

    /// Visits the body of a control statement, giving a bare statement body
    /// a synthetic block so that every control body is a block.
    fn visit_body<'a>(&mut self, body: &Statement<'a>) {
        if matches!(body, Statement::BlockStatement(_)) {
            self.visit_statement(body);
        } else {
            self.open(NodeKind::BlockStatement, None, body.span());
            self.visit_statement(body);
            self.close();
        }
    }

    /// Orders children by position, drops any child that overlaps an earlier
    /// sibling, and renumbers the surviving nodes in pre-order.
    fn finish(mut self, script_id: &str) -> SyntaxTree {
        for i in 0..self.nodes.len() {
            let mut children = std::mem::take(&mut self.nodes[i].children);
            children.sort_by_key(|&c| (self.nodes[c].span.0, self.nodes[c].span.1));
            let mut kept: Vec<usize> = Vec::with_capacity(children.len());
            for c in children {
                let overlaps = kept
                    .last()
                    .is_some_and(|&p| self.nodes[p].span.1 > self.nodes[c].span.0);
                if !overlaps {
                    kept.push(c);
                }
            }
            self.nodes[i].children = kept;
        }

        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        for (n, &old) in order.iter().enumerate() {
            new_id[old] = n;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let raw = &self.nodes[old];
                AstNode {
                    id: new_id[old],
                    kind: raw.kind,
                    children: raw.children.iter().map(|&c| new_id[c]).collect(),
                    span: raw.span,
                    name: raw.name.clone(),
                }
            })
            .collect();
        SyntaxTree {
            script_id: script_id.to_string(),
            root: 0,
            nodes,
        }
    }
}

impl<'a> Visit<'a> for Builder {
    fn enter_node(&mut self, kind: AstKind<'a>) {
        let (k, name) = classify(&kind);
        self.open(k, name, kind.span());
    }

    fn leave_node(&mut self, _kind: AstKind<'a>) {
        self.close();
    }

    // The property name lives on the member node itself.
    fn visit_static_member_expression(&mut self, it: &StaticMemberExpression<'a>) {
        let kind = AstKind::StaticMemberExpression(self.alloc(it));
        self.enter_node(kind);
        self.visit_expression(&it.object);
        self.leave_node(kind);
    }

    fn visit_object_property(&mut self, it: &ObjectProperty<'a>) {
        if it.shorthand {
            let kind = AstKind::ObjectProperty(self.alloc(it));
            self.enter_node(kind);
            self.visit_expression(&it.value);
            self.leave_node(kind);
        } else {
            walk::walk_object_property(self, it);
        }
    }

    fn visit_binding_property(&mut self, it: &BindingProperty<'a>) {
        if it.shorthand {
            let kind = AstKind::BindingProperty(self.alloc(it));
            self.enter_node(kind);
            self.visit_binding_pattern(&it.value);
            self.leave_node(kind);
        } else {
            walk::walk_binding_property(self, it);
        }
    }

    // An expression body behaves like a block holding a single return.
    fn visit_arrow_function_body(&mut self, it: &ArrowFunctionBody<'a>) {
        match it {
            ArrowFunctionBody::FunctionBody(body) => self.visit_function_body(body),
            _ => {
                let expr = it.to_expression();
                self.open(NodeKind::BlockStatement, None, expr.span());
                self.open(NodeKind::ReturnStatement, None, expr.span());
                self.visit_expression(expr);
                self.close();
                self.close();
            }
        }
    }

    fn visit_if_statement(&mut self, it: &IfStatement<'a>) {
        let kind = AstKind::IfStatement(self.alloc(it));
        self.enter_node(kind);
        self.visit_expression(&it.test);
        self.visit_body(&it.consequent);
        if let Some(alt) = &it.alternate {
            self.visit_body(alt);
        }
        self.leave_node(kind);
    }

    fn visit_for_statement(&mut self, it: &ForStatement<'a>) {
        let kind = AstKind::ForStatement(self.alloc(it));
        self.enter_node(kind);
        if let Some(init) = &it.init {
            self.visit_for_statement_init(init);
        }
        if let Some(test) = &it.test {
            self.visit_expression(test);
        }
        if let Some(update) = &it.update {
            self.visit_expression(update);
        }
        self.visit_body(&it.body);
        self.leave_node(kind);
    }

    fn visit_for_in_statement(&mut self, it: &ForInStatement<'a>) {
        let kind = AstKind::ForInStatement(self.alloc(it));
        self.enter_node(kind);
        self.visit_for_statement_left(&it.left);
        self.visit_expression(&it.right);
        self.visit_body(&it.body);
        self.leave_node(kind);
    }

    fn visit_for_of_statement(&mut self, it: &ForOfStatement<'a>) {
        let kind = AstKind::ForOfStatement(self.alloc(it));
        self.enter_node(kind);
        self.visit_for_statement_left(&it.left);
        self.visit_expression(&it.right);
        self.visit_body(&it.body);
        self.leave_node(kind);
    }

    fn visit_while_statement(&mut self, it: &WhileStatement<'a>) {
        let kind = AstKind::WhileStatement(self.alloc(it));
        self.enter_node(kind);
        self.visit_expression(&it.test);
        self.visit_body(&it.body);
        self.leave_node(kind);
    }

    fn visit_do_while_statement(&mut self, it: &DoWhileStatement<'a>) {
        let kind = AstKind::DoWhileStatement(self.alloc(it));
        self.enter_node(kind);
        self.visit_body(&it.body);
        self.visit_expression(&it.test);
        self.leave_node(kind);
    }
}
