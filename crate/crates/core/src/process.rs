//! Plan trees to BPMN-like process graphs.
//!
//! The pipeline removes failed branches, turns each action into a task
//! (followed by an exclusive split when more than one outcome survives),
//! shares identical sub-processes behind exclusive joins, closes the graph
//! with start and end events, and finally runs non-interacting task
//! sequences in parallel.

use crate::model::{ActionId, ActionTree, PlanningTask, VarId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProcessError {
    #[error("not a valid plan for process generation: {0}")]
    InvalidPlan(String),
    #[error("process graph is malformed: {0}")]
    Malformed(String),
    #[error("invalid process JSON: {0}")]
    Json(String),
}

/// Plan tree with FAIL leaves removed. Children keep their outcome index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StrippedTree {
    Stop,
    Act { action: ActionId, may_fail: bool, children: Vec<(usize, StrippedTree)> },
}

impl StrippedTree {
    pub fn size(&self) -> usize {
        match self {
            StrippedTree::Stop => 1,
            StrippedTree::Act { children, .. } => 1 + children.iter().map(|(_, c)| c.size()).sum::<usize>(),
        }
    }

    pub fn stop_leaves(&self) -> usize {
        match self {
            StrippedTree::Stop => 1,
            StrippedTree::Act { children, .. } => children.iter().map(|(_, c)| c.stop_leaves()).sum(),
        }
    }

    /// Actions flagged as possibly failing, in depth-first order.
    pub fn flagged(&self) -> Vec<ActionId> {
        let mut out = Vec::new();
        self.collect_flagged(&mut out);
        out
    }

    fn collect_flagged(&self, out: &mut Vec<ActionId>) {
        if let StrippedTree::Act { action, may_fail, children } = self {
            if *may_fail {
                out.push(*action);
            }
            for (_, c) in children {
                c.collect_flagged(out);
            }
        }
    }
}

/// Removes FAIL leaves and flags the actions that lost a child.
pub fn strip_failed(tree: &ActionTree) -> Result<StrippedTree, ProcessError> {
    match tree {
        ActionTree::Stop => Ok(StrippedTree::Stop),
        ActionTree::Fail => Err(ProcessError::InvalidPlan("the plan consists of FAIL only".into())),
        ActionTree::Act { action, children } => {
            let mut kept = Vec::new();
            for (o, c) in children.iter().enumerate() {
                if *c != ActionTree::Fail {
                    kept.push((o, strip_failed(c)?));
                }
            }
            if kept.is_empty() {
                return Err(ProcessError::InvalidPlan(format!("action {} has only FAIL children", action.0)));
            }
            Ok(StrippedTree::Act { action: *action, may_fail: kept.len() < children.len(), children: kept })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    End,
    Task { name: String, may_fail: bool },
    /// Exclusive split on the outcome of the named task.
    XorSplit { name: String },
    XorJoin,
    AndSplit,
    AndJoin,
}

impl NodeKind {
    pub fn tag(&self) -> &'static str {
        match self {
            NodeKind::Start => "start",
            NodeKind::End => "end",
            NodeKind::Task { .. } => "task",
            NodeKind::XorSplit { .. } => "xor_split",
            NodeKind::XorJoin => "xor_join",
            NodeKind::AndSplit => "and_split",
            NodeKind::AndJoin => "and_join",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    #[serde(flatten)]
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Node ids equal positions in `nodes`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl ProcessGraph {
    fn add(&mut self, kind: NodeKind) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { id, kind });
        id
    }

    fn link(&mut self, from: usize, to: usize, label: Option<String>) {
        self.edges.push(Edge { from, to, label });
    }

    pub fn outgoing(&self, id: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn incoming(&self, id: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == id)
    }

    pub fn start(&self) -> Option<usize> {
        self.nodes.iter().find(|n| n.kind == NodeKind::Start).map(|n| n.id)
    }

    /// Count of nodes per kind tag.
    pub fn kind_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            *m.entry(n.kind.tag()).or_insert(0) += 1;
        }
        m
    }

    pub fn task_names(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Task { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    /// One start, one end, ids consistent, everything reachable from start and reaching end.
    pub fn check_invariants(&self) -> Result<(), ProcessError> {
        let bad = |m: String| Err(ProcessError::Malformed(m));
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return bad(format!("node at position {i} has id {}", n.id));
            }
        }
        let n = self.nodes.len();
        if let Some(e) = self.edges.iter().find(|e| e.from >= n || e.to >= n) {
            return bad(format!("edge {} -> {} refers to a missing node", e.from, e.to));
        }
        let starts: Vec<_> = self.nodes.iter().filter(|x| x.kind == NodeKind::Start).collect();
        let ends: Vec<_> = self.nodes.iter().filter(|x| x.kind == NodeKind::End).collect();
        if starts.len() != 1 || ends.len() != 1 {
            return bad(format!("{} start and {} end nodes", starts.len(), ends.len()));
        }
        let reach = |from: usize, forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![from];
            seen[from] = true;
            while let Some(x) = stack.pop() {
                for e in &self.edges {
                    let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
                    if a == x && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen
        };
        if let Some(i) = reach(starts[0].id, true).iter().position(|s| !s) {
            return bad(format!("node {i} is unreachable from start"));
        }
        if let Some(i) = reach(ends[0].id, false).iter().position(|s| !s) {
            return bad(format!("end is unreachable from node {i}"));
        }
        Ok(())
    }
}

fn edge_label(task: &PlanningTask, action: ActionId, outcome: usize) -> String {
    task.assignment_name(&task.action(action).outcomes[outcome])
}

/// Tasks for actions, exclusive splits where several outcomes remain, start
/// and end events. STOP leaves go to one final exclusive join when there are
/// several of them.
pub fn split_checks(task: &PlanningTask, tree: &StrippedTree) -> ProcessGraph {
    let mut g = ProcessGraph::default();
    let start = g.add(NodeKind::Start);
    let end = g.add(NodeKind::End);
    let sink = if tree.stop_leaves() > 1 {
        let j = g.add(NodeKind::XorJoin);
        g.link(j, end, None);
        j
    } else {
        end
    };
    let entry = build(task, tree, &mut g, sink);
    g.link(start, entry, None);
    g
}

fn build(task: &PlanningTask, tree: &StrippedTree, g: &mut ProcessGraph, sink: usize) -> usize {
    let StrippedTree::Act { action, may_fail, children } = tree else { return sink };
    let a = task.action(*action);
    let node = g.add(NodeKind::Task { name: a.name.clone(), may_fail: *may_fail });
    if children.len() > 1 {
        let split = g.add(NodeKind::XorSplit { name: a.name.clone() });
        g.link(node, split, None);
        for (o, c) in children {
            let to = build(task, c, g, sink);
            g.link(split, to, Some(edge_label(task, *action, *o)));
        }
    } else {
        let (o, c) = &children[0];
        let to = build(task, c, g, sink);
        let label = (!a.is_deterministic()).then(|| edge_label(task, *action, *o));
        g.link(node, to, label);
    }
    node
}

/// Node kind plus labelled successor classes.
type NodeKey = (NodeKind, Vec<(Option<String>, usize)>);

/// Shares identical sub-processes. Two nodes are identical when their kinds
/// and their labelled successors are; every shared node reached from more
/// than one place gets an exclusive join in front of it.
pub fn merge_identical_subtrees(g: &ProcessGraph) -> ProcessGraph {
    let n = g.nodes.len();
    let mut keys: HashMap<NodeKey, usize> = HashMap::new();
    let mut class = vec![usize::MAX; n];
    fn classify(
        g: &ProcessGraph,
        id: usize,
        keys: &mut HashMap<NodeKey, usize>,
        class: &mut Vec<usize>,
    ) -> usize {
        if class[id] != usize::MAX {
            return class[id];
        }
        let succ: Vec<(Option<String>, usize)> = g.outgoing(id).map(|e| (e.label.clone(), e.to)).collect();
        let succ = succ.into_iter().map(|(l, to)| (l, classify(g, to, keys, class))).collect();
        let next = keys.len();
        let c = *keys.entry((g.nodes[id].kind.clone(), succ)).or_insert(next);
        class[id] = c;
        c
    }
    for id in 0..n {
        classify(g, id, &mut keys, &mut class);
    }
    // First node of each class in id order represents it.
    let mut rep_of_class: HashMap<usize, usize> = HashMap::new();
    let mut out = ProcessGraph::default();
    let mut new_id = vec![usize::MAX; n];
    for node in &g.nodes {
        let c = class[node.id];
        if let Some(&r) = rep_of_class.get(&c) {
            new_id[node.id] = new_id[r];
        } else {
            rep_of_class.insert(c, node.id);
            new_id[node.id] = out.add(node.kind.clone());
        }
    }
    let mut edges: Vec<Edge> = Vec::new();
    for e in &g.edges {
        let ne = Edge { from: new_id[e.from], to: new_id[e.to], label: e.label.clone() };
        if !edges.contains(&ne) {
            edges.push(ne);
        }
    }
    out.edges = edges;
    let shared: Vec<usize> = out
        .nodes
        .iter()
        .filter(|x| !matches!(x.kind, NodeKind::XorJoin | NodeKind::AndJoin | NodeKind::End))
        .filter(|x| out.incoming(x.id).count() > 1)
        .map(|x| x.id)
        .collect();
    for id in shared {
        let j = out.add(NodeKind::XorJoin);
        for e in out.edges.iter_mut().filter(|e| e.to == id) {
            e.to = j;
        }
        out.link(j, id, None);
    }
    out
}

/// Whether two actions may run in either order: neither writes a variable the other reads or writes.
pub fn interacts(task: &PlanningTask, a: ActionId, b: ActionId) -> bool {
    let (a, b) = (task.action(a), task.action(b));
    let meets = |x: &[VarId], y: &[VarId]| x.iter().any(|v| y.contains(v));
    let (ra, wa, rb, wb) = (a.reads(), a.writes(), b.reads(), b.writes());
    meets(&wa, &rb) || meets(&wa, &wb) || meets(&wb, &ra)
}

/// Wraps runs of mutually non-interacting consecutive tasks in parallel blocks.
/// Greedy and incomplete: a run is cut at the first task that interacts with it.
pub fn parallelize(g: &ProcessGraph, task: &PlanningTask) -> ProcessGraph {
    let mut g = g.clone();
    let action_of = |g: &ProcessGraph, id: usize| match &g.nodes[id].kind {
        NodeKind::Task { name, .. } => task.action_by_name(name),
        _ => None,
    };
    let single_out = |g: &ProcessGraph, id: usize| {
        let mut it = g.outgoing(id);
        match (it.next(), it.next()) {
            (Some(e), None) => Some(e.clone()),
            _ => None,
        }
    };
    // A chain member has one way in, one way out, and is not decided on by a split.
    let member = |g: &ProcessGraph, id: usize| {
        action_of(g, id).is_some()
            && g.incoming(id).count() == 1
            && single_out(g, id).is_some_and(|e| !matches!(g.nodes[e.to].kind, NodeKind::XorSplit { .. }))
    };
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for id in 0..g.nodes.len() {
        let pred = g.incoming(id).next().map(|e| e.from);
        if !member(&g, id) || pred.is_some_and(|p| member(&g, p)) {
            continue;
        }
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(e) = single_out(&g, cur) {
            if !member(&g, e.to) {
                break;
            }
            chain.push(e.to);
            cur = e.to;
        }
        chains.push(chain);
    }
    for chain in chains {
        let mut block: Vec<usize> = Vec::new();
        for &t in &chain {
            let a = action_of(&g, t).expect("chain member is a task");
            if block.iter().any(|&b| interacts(task, action_of(&g, b).expect("task"), a)) {
                wrap(&mut g, &block);
                block.clear();
            }
            block.push(t);
        }
        wrap(&mut g, &block);
    }
    g
}

fn wrap(g: &mut ProcessGraph, block: &[usize]) {
    if block.len() < 2 {
        return;
    }
    let first = block[0];
    let last = *block.last().expect("non-empty");
    let split = g.add(NodeKind::AndSplit);
    let join = g.add(NodeKind::AndJoin);
    let mut edges = Vec::new();
    let mut out_label: HashMap<usize, Option<String>> = HashMap::new();
    let mut after = None;
    for e in std::mem::take(&mut g.edges) {
        if e.to == first {
            edges.push(Edge { from: e.from, to: split, label: e.label });
        } else if block.contains(&e.from) {
            out_label.insert(e.from, e.label);
            if e.from == last {
                after = Some(e.to);
            }
        } else {
            edges.push(e);
        }
    }
    for &t in block {
        edges.push(Edge { from: split, to: t, label: None });
        edges.push(Edge { from: t, to: join, label: out_label.remove(&t).flatten() });
    }
    edges.push(Edge { from: join, to: after.expect("block has a successor"), label: None });
    g.edges = edges;
}

/// The whole pipeline.
pub fn plan_to_process(task: &PlanningTask, tree: &ActionTree) -> Result<ProcessGraph, ProcessError> {
    let stripped = strip_failed(tree)?;
    let g = split_checks(task, &stripped);
    let g = merge_identical_subtrees(&g);
    let g = parallelize(&g, task);
    g.check_invariants()?;
    Ok(g)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Dot,
    Bpmn,
}

pub fn emit(g: &ProcessGraph, format: Format) -> String {
    match format {
        Format::Json => to_json(g),
        Format::Dot => to_dot(g),
        Format::Bpmn => to_bpmn(g),
    }
}

pub fn to_json(g: &ProcessGraph) -> String {
    serde_json::to_string_pretty(g).expect("process graph serializes")
}

pub fn from_json(text: &str) -> Result<ProcessGraph, ProcessError> {
    let g: ProcessGraph = serde_json::from_str(text).map_err(|e| ProcessError::Json(e.to_string()))?;
    g.check_invariants()?;
    Ok(g)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(g: &ProcessGraph) -> String {
    let mut out = String::from("digraph process {\n  rankdir=LR;\n");
    for n in &g.nodes {
        let attrs = match &n.kind {
            NodeKind::Start => "shape=circle, label=\"\"".to_string(),
            NodeKind::End => "shape=doublecircle, label=\"\"".to_string(),
            NodeKind::Task { name, may_fail } => {
                let warn = if *may_fail { ", color=red, penwidth=2" } else { "" };
                format!("shape=box, style=rounded, label=\"{}\"{warn}", dot_escape(name))
            }
            NodeKind::XorSplit { .. } | NodeKind::XorJoin => "shape=diamond, label=\"×\"".to_string(),
            NodeKind::AndSplit | NodeKind::AndJoin => "shape=diamond, label=\"+\"".to_string(),
        };
        let _ = writeln!(out, "  n{} [{attrs}];", n.id);
    }
    for e in &g.edges {
        match &e.label {
            Some(l) => {
                let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, dot_escape(l));
            }
            None => {
                let _ = writeln!(out, "  n{} -> n{};", e.from, e.to);
            }
        }
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn to_bpmn(g: &ProcessGraph) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <definitions xmlns=\"http://www.omg.org/spec/BPMN/20100524/MODEL\" id=\"definitions\" targetNamespace=\"urn:samplan\">\n\
         \x20 <process id=\"process\" isExecutable=\"false\">\n",
    );
    for n in &g.nodes {
        let id = format!("n{}", n.id);
        let line = match &n.kind {
            NodeKind::Start => format!("<startEvent id=\"{id}\"/>"),
            NodeKind::End => format!("<endEvent id=\"{id}\"/>"),
            NodeKind::Task { name, may_fail } => {
                let doc = if *may_fail { "<documentation>may fail</documentation>" } else { "" };
                format!("<task id=\"{id}\" name=\"{}\">{doc}</task>", xml_escape(name))
            }
            NodeKind::XorSplit { name } => {
                format!("<exclusiveGateway id=\"{id}\" name=\"{}\" gatewayDirection=\"Diverging\"/>", xml_escape(name))
            }
            NodeKind::XorJoin => format!("<exclusiveGateway id=\"{id}\" gatewayDirection=\"Converging\"/>"),
            NodeKind::AndSplit => format!("<parallelGateway id=\"{id}\" gatewayDirection=\"Diverging\"/>"),
            NodeKind::AndJoin => format!("<parallelGateway id=\"{id}\" gatewayDirection=\"Converging\"/>"),
        };
        let _ = writeln!(out, "    {line}");
    }
    for (i, e) in g.edges.iter().enumerate() {
        let name = e.label.as_deref().map(|l| format!(" name=\"{}\"", xml_escape(l))).unwrap_or_default();
        let _ = writeln!(out, "    <sequenceFlow id=\"f{i}\" sourceRef=\"n{}\" targetRef=\"n{}\"{name}/>", e.from, e.to);
    }
    out.push_str("  </process>\n</definitions>\n");
    out
}

/// One executed task and, for nondeterministic actions, the observed outcome.
pub type Step = (String, Option<String>);

/// Root-to-STOP step sequences of a stripped plan.
pub fn tree_traces(task: &PlanningTask, tree: &StrippedTree) -> Vec<Vec<Step>> {
    let mut out = Vec::new();
    tree_walk(task, tree, &mut Vec::new(), &mut out);
    out
}

fn tree_walk(task: &PlanningTask, tree: &StrippedTree, prefix: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
    match tree {
        StrippedTree::Stop => out.push(prefix.clone()),
        StrippedTree::Act { action, children, .. } => {
            let a = task.action(*action);
            for (o, c) in children {
                let label = (!a.is_deterministic()).then(|| edge_label(task, *action, *o));
                prefix.push((a.name.clone(), label));
                tree_walk(task, c, prefix, out);
                prefix.pop();
            }
        }
    }
}

/// Start-to-end step sequences of a graph. Parallel branches are either
/// concatenated in edge order or, with `interleave`, merged in every order.
pub fn graph_traces(g: &ProcessGraph, interleave: bool) -> Result<Vec<Vec<Step>>, ProcessError> {
    let start = g.start().ok_or_else(|| ProcessError::Malformed("no start".into()))?;
    let mut out = Vec::new();
    walk(g, start, Vec::new(), interleave, &mut out, 0)?;
    Ok(out)
}

fn walk(
    g: &ProcessGraph,
    id: usize,
    prefix: Vec<Step>,
    interleave: bool,
    out: &mut Vec<Vec<Step>>,
    depth: usize,
) -> Result<(), ProcessError> {
    if depth > g.nodes.len() + 1 {
        return Err(ProcessError::Malformed("cycle".into()));
    }
    let only = |id: usize| {
        let v: Vec<&Edge> = g.outgoing(id).collect();
        if v.len() == 1 {
            Ok(v[0].clone())
        } else {
            Err(ProcessError::Malformed(format!("node {id} needs exactly one successor")))
        }
    };
    match &g.nodes[id].kind {
        NodeKind::End => {
            out.push(prefix);
            Ok(())
        }
        NodeKind::Start | NodeKind::XorJoin => walk(g, only(id)?.to, prefix, interleave, out, depth + 1),
        NodeKind::Task { name, .. } => {
            let e = only(id)?;
            if let NodeKind::XorSplit { .. } = g.nodes[e.to].kind {
                for b in g.outgoing(e.to) {
                    let mut p = prefix.clone();
                    p.push((name.clone(), b.label.clone()));
                    walk(g, b.to, p, interleave, out, depth + 1)?;
                }
                Ok(())
            } else {
                let mut p = prefix;
                p.push((name.clone(), e.label.clone()));
                walk(g, e.to, p, interleave, out, depth + 1)
            }
        }
        NodeKind::AndSplit => {
            let mut branches = Vec::new();
            let mut join = None;
            for b in g.outgoing(id) {
                let mut steps = Vec::new();
                let mut cur = b.to;
                loop {
                    match &g.nodes[cur].kind {
                        NodeKind::Task { name, .. } => {
                            let e = only(cur)?;
                            steps.push((name.clone(), e.label.clone()));
                            cur = e.to;
                        }
                        NodeKind::AndJoin => break,
                        _ => return Err(ProcessError::Malformed(format!("parallel branch reaches node {cur}"))),
                    }
                }
                join = Some(cur);
                branches.push(steps);
            }
            let join = join.ok_or_else(|| ProcessError::Malformed("empty parallel block".into()))?;
            let next = only(join)?.to;
            let orders = if interleave { interleavings(&branches) } else { vec![branches.concat()] };
            for o in orders {
                let mut p = prefix.clone();
                p.extend(o);
                walk(g, next, p, interleave, out, depth + 1)?;
            }
            Ok(())
        }
        NodeKind::XorSplit { .. } | NodeKind::AndJoin => {
            Err(ProcessError::Malformed(format!("node {id} reached outside its block")))
        }
    }
}

fn interleavings(branches: &[Vec<Step>]) -> Vec<Vec<Step>> {
    if branches.iter().all(|b| b.is_empty()) {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, b) in branches.iter().enumerate() {
        if let Some((head, rest)) = b.split_first() {
            let mut next = branches.to_vec();
            next[i] = rest.to_vec();
            for mut tail in interleavings(&next) {
                tail.insert(0, head.clone());
                out.push(tail);
            }
        }
    }
    out
}

/// Checks that the graph executes exactly the successful paths of the plan:
/// the sequential reading of the graph yields the plan's root-to-STOP paths,
/// and every interleaving of parallel blocks is executable and reaches the goal.
pub fn check_language(task: &PlanningTask, tree: &ActionTree, g: &ProcessGraph) -> Result<(), String> {
    let stripped = strip_failed(tree).map_err(|e| e.to_string())?;
    let mut expected = tree_traces(task, &stripped);
    let mut sequential = graph_traces(g, false).map_err(|e| e.to_string())?;
    expected.sort();
    sequential.sort();
    if expected != sequential {
        return Err(format!("graph paths {sequential:?} differ from plan paths {expected:?}"));
    }
    for trace in graph_traces(g, true).map_err(|e| e.to_string())? {
        let mut ss = task.initial_search_state();
        for (name, label) in &trace {
            let a = task.action_by_name(name).ok_or_else(|| format!("unknown task `{name}`"))?;
            let act = task.action(a);
            let o = match label {
                None if act.is_deterministic() => 0,
                None => return Err(format!("`{name}` has no outcome label")),
                Some(l) => (0..act.outcomes.len())
                    .find(|&o| edge_label(task, a, o) == *l)
                    .ok_or_else(|| format!("`{name}` has no outcome `{l}`"))?,
            };
            if !task.is_applicable(&ss, a) {
                return Err(format!("`{name}` is not applicable in execution {trace:?}"));
            }
            ss = task.successor(&ss, a, o);
        }
        if !task.goal_satisfied(&ss.state) {
            return Err(format!("execution {trace:?} ends outside the goal"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples_data::{customer_quote_task, customer_quote_weak_plan, one_action_task};

    fn task_node<'a>(g: &'a ProcessGraph, name: &str) -> &'a Node {
        g.nodes.iter().find(|n| matches!(&n.kind, NodeKind::Task { name: m, .. } if m == name)).unwrap()
    }

    #[test]
    fn strip_flags_actions_that_lost_children() {
        let task = customer_quote_task();
        let s = strip_failed(&customer_quote_weak_plan(&task)).unwrap();
        let names: Vec<&str> = s.flagged().iter().map(|a| task.action(*a).name.as_str()).collect();
        assert_eq!(names, ["Check CQ Completeness", "Check CQ Consistency", "Decide CQ Approval"]);
        assert_eq!(s.stop_leaves(), 2);
    }

    #[test]
    fn strip_keeps_strong_plans() {
        let plan = ActionTree::Act { action: ActionId(0), children: vec![ActionTree::Fail, ActionTree::Stop] };
        let s = strip_failed(&plan).unwrap();
        assert_eq!(s, StrippedTree::Act { action: ActionId(0), may_fail: true, children: vec![(1, StrippedTree::Stop)] });
        assert_eq!(strip_failed(&ActionTree::Stop).unwrap(), StrippedTree::Stop);
        assert!(strip_failed(&ActionTree::Fail).is_err());
    }

    #[test]
    fn cq_split_and_merge() {
        let task = customer_quote_task();
        let s = strip_failed(&customer_quote_weak_plan(&task)).unwrap();
        let g = split_checks(&task, &s);
        assert_eq!(g.kind_counts()["task"], 12);
        assert_eq!(g.kind_counts()["xor_split"], 1);
        let split = g.nodes.iter().find(|n| matches!(n.kind, NodeKind::XorSplit { .. })).unwrap();
        assert_eq!(split.kind, NodeKind::XorSplit { name: "Check CQ Approval Status".into() });
        let m = merge_identical_subtrees(&g);
        assert_eq!(m.kind_counts()["task"], 8);
        assert_eq!(m.kind_counts()["xor_join"], 2);
        let submit = task_node(&m, "Submit CQ");
        let into: Vec<&Edge> = m.incoming(submit.id).collect();
        assert_eq!(into.len(), 1);
        assert_eq!(m.nodes[into[0].from].kind, NodeKind::XorJoin);
        m.check_invariants().unwrap();
    }

    #[test]
    fn cq_golden_graph() {
        let task = customer_quote_task();
        let plan = customer_quote_weak_plan(&task);
        let g = plan_to_process(&task, &plan).unwrap();
        let counts: Vec<(&str, usize)> = g.kind_counts().into_iter().collect();
        assert_eq!(
            counts,
            [("and_join", 1), ("and_split", 1), ("end", 1), ("start", 1), ("task", 8), ("xor_join", 2), ("xor_split", 1)]
        );
        let split = g.nodes.iter().find(|n| n.kind == NodeKind::AndSplit).unwrap();
        let mut branches: Vec<&str> = g
            .outgoing(split.id)
            .map(|e| match &g.nodes[e.to].kind {
                NodeKind::Task { name, .. } => name.as_str(),
                _ => "",
            })
            .collect();
        branches.sort();
        assert_eq!(branches, ["Check CQ Completeness", "Check CQ Consistency"]);
        let warned = g.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Task { may_fail: true, .. })).count();
        assert_eq!(warned, 3);
        check_language(&task, &plan, &g).unwrap();
    }

    #[test]
    fn submit_and_mark_stay_sequential() {
        let task = customer_quote_task();
        let id = |n: &str| task.action_by_name(n).unwrap();
        assert!(interacts(&task, id("Submit CQ"), id("Mark CQ as Accepted")));
        assert!(!interacts(&task, id("Check CQ Completeness"), id("Check CQ Consistency")));
        assert!(interacts(&task, id("Create Follow-Up for CQ"), id("Archive CQ")));
    }

    #[test]
    fn trivial_graphs() {
        let task = one_action_task();
        let g = plan_to_process(&task, &ActionTree::Stop).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        let dot = to_dot(&g);
        assert_eq!(dot.matches("->").count(), 1);
        let plan = ActionTree::Act { action: ActionId(0), children: vec![ActionTree::Fail, ActionTree::Stop] };
        let g = plan_to_process(&task, &plan).unwrap();
        assert_eq!(g.task_names(), ["a"]);
        assert_eq!(g.kind_counts().get("xor_join"), None);
        check_language(&task, &plan, &g).unwrap();
    }

    #[test]
    fn json_round_trip_and_other_formats() {
        let task = customer_quote_task();
        let g = plan_to_process(&task, &customer_quote_weak_plan(&task)).unwrap();
        assert_eq!(from_json(&to_json(&g)).unwrap(), g);
        let dot = emit(&g, Format::Dot);
        assert_eq!(dot.matches("color=red").count(), 3);
        assert!(dot.contains("label=\"+\""));
        let xml = emit(&g, Format::Bpmn);
        assert_eq!(xml.matches("<task ").count(), 8);
        assert_eq!(xml.matches("<parallelGateway").count(), 2);
        assert_eq!(xml.matches("<exclusiveGateway").count(), 3);
    }

    #[test]
    fn malformed_json_is_rejected() {
        assert!(from_json("{\"nodes\":[{\"id\":0,\"kind\":\"start\"}],\"edges\":[]}").is_err());
        assert!(from_json("[]").is_err());
    }

    #[test]
    fn language_check_detects_tampering() {
        let task = customer_quote_task();
        let plan = customer_quote_weak_plan(&task);
        let mut g = plan_to_process(&task, &plan).unwrap();
        let archive = task_node(&g, "Archive CQ").id;
        g.nodes[archive].kind = NodeKind::Task { name: "Submit CQ".into(), may_fail: false };
        assert!(check_language(&task, &plan, &g).is_err());
    }
}
