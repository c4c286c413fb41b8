//! Statement structure of a script: def-use edges between statements, the
//! decomposition of each block into sequential and parallel groups, and the
//! relations read off that decomposition.

use std::collections::{BTreeSet, HashMap};

use crate::ast::{NodeId, NodeKind, SyntaxTree};
use crate::chains::Chain;

use super::{OperatorOccurrence, ParallelRule, Relation, Relationship, ScriptAnalysis};

pub(super) struct StmtIndex {
    pub parent: Vec<Option<NodeId>>,
    pub depth: Vec<usize>,
    /// Nearest statement-level ancestor-or-self.
    pub stmt_of: Vec<Option<NodeId>>,
}

fn is_block(kind: NodeKind) -> bool {
    matches!(kind, NodeKind::Program | NodeKind::BlockStatement)
}

impl StmtIndex {
    pub fn new(tree: &SyntaxTree) -> StmtIndex {
        let parent = tree.parents();
        let depth = tree.depths();
        let mut stmt_of = vec![None; tree.len()];
        for id in tree.preorder() {
            stmt_of[id] = match parent[id] {
                Some(p) if is_block(tree.node(p).kind) => Some(id),
                Some(p) => stmt_of[p],
                None => None,
            };
        }
        StmtIndex {
            parent,
            depth,
            stmt_of,
        }
    }

    /// Nearest statement-level strict ancestor of a statement.
    fn stmt_parent(&self, stmt: NodeId) -> Option<NodeId> {
        self.parent[stmt].and_then(|p| self.stmt_of[p])
    }
}

type Scope = HashMap<String, Option<NodeId>>;

enum Task {
    Enter(NodeId),
    Bind(Vec<String>, NodeId),
    PopScope,
}

fn collect_identifiers(tree: &SyntaxTree, root: NodeId, out: &mut Vec<String>) {
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        if node.kind == NodeKind::Identifier {
            if let Some(name) = &node.name {
                out.push(name.clone());
            }
        }
        stack.extend(node.children.iter().rev());
    }
}

/// The name of a function declaration: an identifier directly under a
/// statement-level function node.
fn declared_function_name(tree: &SyntaxTree, id: NodeId) -> Option<&str> {
    let node = tree.node(id);
    if node.kind != NodeKind::FunctionExpression {
        return None;
    }
    node.children
        .iter()
        .map(|&c| tree.node(c))
        .find(|c| c.kind == NodeKind::Identifier)
        .and_then(|c| c.name.as_deref())
}

/// Def-use edges between statement-level nodes: `(a, b)` when a variable or
/// function declared in `a` is referenced in `b`. Lexical scoping at function
/// granularity; assignments do not define.
fn def_use_edges(tree: &SyntaxTree, index: &StmtIndex) -> BTreeSet<(NodeId, NodeId)> {
    let mut edges = BTreeSet::new();
    let mut scopes: Vec<Scope> = vec![Scope::new()];
    let mut tasks = vec![Task::Enter(tree.root)];

    while let Some(task) = tasks.pop() {
        let id = match task {
            Task::Enter(id) => id,
            Task::Bind(names, stmt) => {
                let scope = scopes.last_mut().expect("scope stack never empties");
                for n in names {
                    scope.insert(n, Some(stmt));
                }
                continue;
            }
            Task::PopScope => {
                scopes.pop();
                continue;
            }
        };
        let node = tree.node(id);
        match node.kind {
            NodeKind::Program | NodeKind::BlockStatement => {
                // Function declarations are visible throughout their scope.
                let scope = scopes.last_mut().expect("scope stack never empties");
                for &c in &node.children {
                    if let Some(name) = declared_function_name(tree, c) {
                        scope.insert(name.to_string(), Some(c));
                    }
                }
                tasks.extend(node.children.iter().rev().map(|&c| Task::Enter(c)));
            }
            NodeKind::FunctionExpression => {
                let (body, head) = match node.children.split_last() {
                    Some((&last, rest)) if tree.node(last).kind == NodeKind::BlockStatement => {
                        (Some(last), rest)
                    }
                    _ => (None, node.children.as_slice()),
                };
                let mut params = Vec::new();
                for &c in head {
                    collect_identifiers(tree, c, &mut params);
                }
                scopes.push(params.into_iter().map(|n| (n, None)).collect());
                tasks.push(Task::PopScope);
                if let Some(body) = body {
                    tasks.push(Task::Enter(body));
                }
            }
            NodeKind::VariableDeclaration => {
                let mut names = Vec::new();
                let mut inits = Vec::new();
                for &decl in &node.children {
                    let d = tree.node(decl);
                    if let Some((&pattern, rest)) = d.children.split_first() {
                        collect_identifiers(tree, pattern, &mut names);
                        inits.extend_from_slice(rest);
                    }
                }
                if let Some(stmt) = index.stmt_of[id] {
                    tasks.push(Task::Bind(names, stmt));
                }
                tasks.extend(inits.iter().rev().map(|&c| Task::Enter(c)));
            }
            NodeKind::Identifier => {
                let Some(name) = &node.name else { continue };
                let def = scopes
                    .iter()
                    .rev()
                    .find_map(|s| s.get(name))
                    .copied()
                    .flatten();
                if let (Some(def), Some(used_in)) = (def, index.stmt_of[id]) {
                    if def != used_in {
                        edges.insert((def, used_in));
                    }
                }
            }
            _ => tasks.extend(node.children.iter().rev().map(|&c| Task::Enter(c))),
        }
    }
    edges
}

/// Lifts statement edges to pairs of sibling statements in a common block,
/// keyed by the block. Edges between a statement and its own descendants,
/// or between statements in different blocks of one statement, are dropped.
fn sibling_edges(
    tree: &SyntaxTree,
    index: &StmtIndex,
    edges: &BTreeSet<(NodeId, NodeId)>,
) -> HashMap<NodeId, BTreeSet<(NodeId, NodeId)>> {
    let mut sdepth = vec![0usize; tree.len()];
    for id in tree.preorder() {
        if index.stmt_of[id] == Some(id) {
            sdepth[id] = index.stmt_parent(id).map_or(0, |p| sdepth[p] + 1);
        }
    }
    let mut out: HashMap<NodeId, BTreeSet<(NodeId, NodeId)>> = HashMap::new();
    for &(a, b) in edges {
        let (mut x, mut y) = (a, b);
        while sdepth[x] > sdepth[y] {
            x = index.stmt_parent(x).expect("deeper statement has a parent");
        }
        while sdepth[y] > sdepth[x] {
            y = index.stmt_parent(y).expect("deeper statement has a parent");
        }
        if x == y {
            continue;
        }
        while index.stmt_parent(x) != index.stmt_parent(y) {
            x = index.stmt_parent(x).expect("statements at equal depth");
            y = index.stmt_parent(y).expect("statements at equal depth");
        }
        if index.parent[x] == index.parent[y] {
            let block = index.parent[x].expect("statements have parents");
            out.entry(block).or_default().insert((x, y));
        }
    }
    out
}

/// Chain structure over occurrence indices.
#[derive(Debug, Clone)]
enum Shape {
    Leaf(usize),
    Seq(Vec<Shape>),
    Par(Vec<Shape>),
    Nest(usize, Box<Shape>),
}

fn seq(parts: impl IntoIterator<Item = Shape>) -> Option<Shape> {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Shape::Seq(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => None,
        1 => out.pop(),
        _ => Some(Shape::Seq(out)),
    }
}

fn par(parts: impl IntoIterator<Item = Shape>) -> Option<Shape> {
    let mut out = Vec::new();
    for p in parts {
        match p {
            Shape::Par(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => None,
        1 => out.pop(),
        _ => Some(Shape::Par(out)),
    }
}

impl Shape {
    /// The occurrence a relation into this group attaches to. For a
    /// parallel group this is the entry with the smallest name, so that it
    /// does not depend on the source order of the branches.
    fn entry(&self, occs: &[OperatorOccurrence]) -> usize {
        match self {
            Shape::Leaf(o) | Shape::Nest(o, _) => *o,
            Shape::Seq(parts) => parts[0].entry(occs),
            Shape::Par(branches) => branches
                .iter()
                .map(|b| b.entry(occs))
                .min_by(|&a, &b| {
                    occs[a]
                        .canonical_name
                        .cmp(&occs[b].canonical_name)
                        .then(a.cmp(&b))
                })
                .expect("groups are non-empty"),
        }
    }

    fn parallel_pairs(&self, occs: &[OperatorOccurrence], out: &mut Vec<Relation>) {
        match self {
            Shape::Leaf(_) => {}
            Shape::Seq(parts) => parts.iter().for_each(|p| p.parallel_pairs(occs, out)),
            Shape::Nest(_, body) => body.parallel_pairs(occs, out),
            Shape::Par(branches) => {
                let entries: Vec<usize> = branches.iter().map(|b| b.entry(occs)).collect();
                for i in 0..entries.len() {
                    for j in i + 1..entries.len() {
                        out.push(Relation::new(
                            &occs[entries[i]].canonical_name,
                            &occs[entries[j]].canonical_name,
                            Relationship::Parallel,
                        ));
                    }
                }
                branches.iter().for_each(|b| b.parallel_pairs(occs, out));
            }
        }
    }

    fn to_chain(&self, occs: &[OperatorOccurrence]) -> Chain {
        match self {
            Shape::Leaf(o) => Chain::leaf(occs[*o].canonical_name.as_str()),
            Shape::Seq(parts) => {
                Chain::seq(parts.iter().map(|p| p.to_chain(occs))).expect("non-empty sequence")
            }
            Shape::Par(branches) => {
                Chain::par(branches.iter().map(|b| b.to_chain(occs))).expect("non-empty group")
            }
            Shape::Nest(o, body) => {
                Chain::nest(occs[*o].canonical_name.as_str(), body.to_chain(occs))
            }
        }
    }
}

struct Builder<'a> {
    tree: &'a SyntaxTree,
    index: &'a StmtIndex,
    occs: &'a [OperatorOccurrence],
    own: &'a HashMap<NodeId, Vec<usize>>,
    occ_at: HashMap<NodeId, usize>,
    sib: HashMap<NodeId, BTreeSet<(NodeId, NodeId)>>,
    nested: Vec<(usize, usize)>,
    /// Scratch membership stamps for `decompose`.
    stamp: Vec<usize>,
    generation: usize,
}

impl Builder<'_> {
    fn block(&mut self, block: NodeId) -> Option<Shape> {
        let stmts = self.tree.node(block).children.clone();
        if stmts.is_empty() {
            return None;
        }
        let pos: HashMap<NodeId, usize> = stmts.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut succ = vec![Vec::new(); stmts.len()];
        let mut pred = vec![Vec::new(); stmts.len()];
        if let Some(edges) = self.sib.get(&block) {
            for (a, b) in edges {
                let (i, j) = (pos[a], pos[b]);
                succ[i].push(j);
                pred[j].push(i);
            }
        }
        let mut shapes: Vec<Option<Shape>> = stmts.iter().map(|&s| self.stmt(s)).collect();
        if self.stamp.len() < stmts.len() {
            self.stamp.resize(stmts.len(), 0);
        }
        let all: Vec<usize> = (0..stmts.len()).collect();
        self.decompose(all, &succ, &pred, &mut shapes)
    }

    /// Splits a set of sibling statements into independent groups (parallel)
    /// and, within a connected group, peels off the statements with no
    /// predecessors (sequential).
    fn decompose(
        &mut self,
        set: Vec<usize>,
        succ: &[Vec<usize>],
        pred: &[Vec<usize>],
        shapes: &mut [Option<Shape>],
    ) -> Option<Shape> {
        let mut parts = Vec::new();
        let mut cur = set;
        loop {
            if cur.len() == 1 {
                parts.extend(shapes[cur[0]].take());
                break;
            }
            let comps = self.components(&cur, succ, pred);
            if comps.len() >= 2 {
                let branches: Vec<Shape> = comps
                    .into_iter()
                    .filter_map(|c| self.decompose(c, succ, pred, shapes))
                    .collect();
                parts.extend(par(branches));
                break;
            }
            self.mark(&cur);
            let generation = self.generation;
            let (mut sources, mut rest): (Vec<usize>, Vec<usize>) = cur
                .iter()
                .partition(|&&i| pred[i].iter().all(|&p| self.stamp[p] != generation));
            if sources.is_empty() {
                // A cycle through hoisted function declarations: take the
                // earliest statement first.
                sources.push(rest.remove(0));
            }
            parts.extend(par(sources.iter().filter_map(|&i| shapes[i].take())));
            cur = rest;
        }
        seq(parts)
    }

    fn mark(&mut self, set: &[usize]) {
        self.generation += 1;
        for &i in set {
            self.stamp[i] = self.generation;
        }
    }

    /// Weakly connected components of the subgraph induced by `set`, each in
    /// ascending order, ordered by their smallest member.
    fn components(
        &mut self,
        set: &[usize],
        succ: &[Vec<usize>],
        pred: &[Vec<usize>],
    ) -> Vec<Vec<usize>> {
        self.mark(set);
        let inside = self.generation;
        self.generation += 1;
        let seen = self.generation;
        let mut comps = Vec::new();
        for &start in set {
            if self.stamp[start] == seen {
                continue;
            }
            self.stamp[start] = seen;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for &j in succ[i].iter().chain(&pred[i]) {
                    if self.stamp[j] == inside {
                        self.stamp[j] = seen;
                        comp.push(j);
                        stack.push(j);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Blocks inside `stmt` that are not inside another block of `stmt`, in
    /// source order.
    fn inner_blocks(&self, stmt: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self
            .tree
            .node(stmt)
            .children
            .iter()
            .rev()
            .copied()
            .collect();
        while let Some(id) = stack.pop() {
            let node = self.tree.node(id);
            if node.kind == NodeKind::BlockStatement {
                out.push(id);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    fn stmt(&mut self, stmt: NodeId) -> Option<Shape> {
        let node = self.tree.node(stmt);
        if node.kind == NodeKind::BlockStatement {
            return self.block(stmt);
        }
        let is_control = node.kind.is_control();
        let own: &[usize] = self.own.get(&stmt).map_or(&[], Vec::as_slice);

        let mut attached: HashMap<usize, Vec<Shape>> = HashMap::new();
        let mut control_bodies = Vec::new();
        let mut unattached = Vec::new();
        for b in self.inner_blocks(stmt) {
            let Some(body) = self.block(b) else { continue };
            let p = self.index.parent[b].expect("inner blocks have parents");
            let pnode = self.tree.node(p);
            if pnode.kind == NodeKind::FunctionExpression && pnode.children.last() == Some(&b) {
                let call = self.index.parent[p]
                    .filter(|&q| {
                        let q = self.tree.node(q);
                        q.kind == NodeKind::CallExpression && q.children.first() != Some(&p)
                    })
                    .and_then(|q| self.occ_at.get(&q).copied());
                match call {
                    Some(o) => {
                        self.nested.push((o, body.entry(self.occs)));
                        attached.entry(o).or_default().push(body);
                    }
                    None => unattached.push(body),
                }
            } else if p == stmt && is_control {
                control_bodies.push(body);
            } else {
                unattached.push(body);
            }
        }

        let mut items: Vec<Shape> = own
            .iter()
            .map(|&o| match attached.remove(&o) {
                Some(bodies) => Shape::Nest(o, Box::new(par(bodies).expect("attached bodies"))),
                None => Shape::Leaf(o),
            })
            .collect();
        if !control_bodies.is_empty() {
            for &h in own {
                for body in &control_bodies {
                    self.nested.push((h, body.entry(self.occs)));
                }
            }
            let body = par(control_bodies).expect("control bodies");
            match items.pop() {
                Some(Shape::Leaf(h)) => items.push(Shape::Nest(h, Box::new(body))),
                Some(Shape::Nest(h, inner)) => {
                    let merged = par([*inner, body]).expect("two bodies");
                    items.push(Shape::Nest(h, Box::new(merged)));
                }
                Some(other) => {
                    items.push(other);
                    items.push(body);
                }
                None => items.push(body),
            }
        }
        items.extend(unattached);
        seq(items)
    }
}

/// Parallel pairs under the literal rule: sibling statements whose operator
/// name sets are both non-empty and disjoint.
fn intersection_pairs(tree: &SyntaxTree, occs: &[OperatorOccurrence]) -> Vec<Relation> {
    let order = tree.preorder();
    let mut tin = vec![0usize; tree.len()];
    for (i, &id) in order.iter().enumerate() {
        tin[id] = i;
    }
    let mut tout = vec![0usize; tree.len()];
    for &id in order.iter().rev() {
        let last = tree.node(id).children.last();
        tout[id] = last.map_or(tin[id] + 1, |&c| tout[c]);
    }
    let mut sorted: Vec<(usize, usize, usize)> = occs
        .iter()
        .enumerate()
        .map(|(i, o)| (tin[o.stmt_id], o.order_in_stmt, i))
        .collect();
    sorted.sort_unstable();

    let mut out = Vec::new();
    for node in &tree.nodes {
        if !is_block(node.kind) || node.children.len() < 2 {
            continue;
        }
        let groups: Vec<(usize, Vec<&str>)> = node
            .children
            .iter()
            .filter_map(|&c| {
                let lo = sorted.partition_point(|t| t.0 < tin[c]);
                let hi = sorted.partition_point(|t| t.0 < tout[c]);
                if lo == hi {
                    return None;
                }
                let mut names: Vec<&str> = sorted[lo..hi]
                    .iter()
                    .map(|t| occs[t.2].canonical_name.as_str())
                    .collect();
                names.sort_unstable();
                names.dedup();
                Some((sorted[lo].2, names))
            })
            .collect();
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                if disjoint(&groups[i].1, &groups[j].1) {
                    out.push(Relation::new(
                        &occs[groups[i].0].canonical_name,
                        &occs[groups[j].0].canonical_name,
                        Relationship::Parallel,
                    ));
                }
            }
        }
    }
    out
}

fn disjoint(a: &[&str], b: &[&str]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

pub(super) fn analyze(
    tree: &SyntaxTree,
    occs: &[OperatorOccurrence],
    rule: ParallelRule,
) -> ScriptAnalysis {
    let index = StmtIndex::new(tree);
    let mut own: HashMap<NodeId, Vec<usize>> = HashMap::new();
    let mut occ_at = HashMap::new();
    for (i, o) in occs.iter().enumerate() {
        own.entry(o.stmt_id).or_default().push(i);
        occ_at.insert(o.call_node, i);
    }
    let name = |i: usize| occs[i].canonical_name.as_str();
    let mut relations = Vec::new();

    // Consecutive calls of one statement.
    for w in occs.windows(2) {
        if w[0].stmt_id == w[1].stmt_id {
            relations.push(Relation::new(
                &w[0].canonical_name,
                &w[1].canonical_name,
                Relationship::Sequential,
            ));
        }
    }

    // Dataflow between statements: last call of the defining statement to
    // the first call of the using one.
    let edges = def_use_edges(tree, &index);
    for (a, b) in &edges {
        if let (Some(from), Some(to)) = (own.get(a), own.get(b)) {
            relations.push(Relation::new(
                name(*from.last().expect("non-empty")),
                name(to[0]),
                Relationship::Sequential,
            ));
        }
    }

    let mut builder = Builder {
        tree,
        index: &index,
        occs,
        own: &own,
        occ_at,
        sib: sibling_edges(tree, &index, &edges),
        nested: Vec::new(),
        stamp: Vec::new(),
        generation: 0,
    };
    let shape = builder.block(tree.root);
    for &(head, inner) in &builder.nested {
        relations.push(Relation::new(name(head), name(inner), Relationship::Nested));
    }

    match rule {
        ParallelRule::Dataflow => {
            if let Some(s) = &shape {
                s.parallel_pairs(occs, &mut relations);
            }
        }
        ParallelRule::Intersection => relations.extend(intersection_pairs(tree, occs)),
    }

    ScriptAnalysis {
        relations,
        chain: shape.map(|s| s.to_chain(occs)),
    }
}
