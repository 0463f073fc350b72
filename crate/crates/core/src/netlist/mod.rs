// SPDX-License-Identifier: Apache-2.0
//! Sequential and-inverter graph netlists.
//!
//! A [`CircuitGraph`] holds PI, AND, NOT and DFF nodes. Every graph is
//! validated and levelized on construction: DFF incoming edges are cut to
//! obtain the cycle-broken view, PIs sit at level 0, DFFs at level 1, and
//! every combinational node one level above its deepest predecessor.

mod decompose;
mod generate;
mod parse;

pub use decompose::{decompose_gates, Decomposed, FanoutMap};
pub use generate::{generate_random_circuit, GenParams};
pub use parse::{parse_gate_netlist, parse_netlist, Gate, GateKind, GateNetlist};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: undefined signal `{name}`")]
    UndefinedSignal { name: String, line: usize },
    #[error("line {line}: signal `{name}` defined more than once")]
    DuplicateSignal { name: String, line: usize },
    #[error("line {line}: unsupported gate type `{gate}`")]
    UnsupportedGate { gate: String, line: usize },
    #[error("node `{name}`: {kind} expects {expected} input(s), found {found}")]
    Arity {
        name: String,
        kind: String,
        expected: String,
        found: usize,
    },
    #[error("node {node}: fanin {fanin} out of range")]
    DanglingEdge { node: NodeId, fanin: NodeId },
    #[error("combinational cycle (no DFF) through: {}", .names.join(", "))]
    CombinationalCycle { names: Vec<String> },
}

/// The four node types of a sequential AIG, in one-hot feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    #[serde(rename = "PI")]
    Pi,
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "DFF")]
    Dff,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [NodeKind::Pi, NodeKind::And, NodeKind::Not, NodeKind::Dff];

    pub fn index(self) -> usize {
        match self {
            NodeKind::Pi => 0,
            NodeKind::And => 1,
            NodeKind::Not => 2,
            NodeKind::Dff => 3,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NodeKind::Pi => 0,
            NodeKind::And => 2,
            NodeKind::Not | NodeKind::Dff => 1,
        }
    }

    pub fn is_combinational(self) -> bool {
        matches!(self, NodeKind::And | NodeKind::Not)
    }

    /// 4-d one-hot node feature.
    pub fn one_hot(self) -> [f64; 4] {
        let mut f = [0.0; 4];
        f[self.index()] = 1.0;
        f
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Pi => "PI",
            NodeKind::And => "AND",
            NodeKind::Not => "NOT",
            NodeKind::Dff => "DFF",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub fanins: Vec<NodeId>,
}

/// Level assignment over the cycle-broken view plus the per-level node
/// batches used for topological batching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levelization {
    pub levels: Vec<u32>,
    pub batches: Vec<Vec<NodeId>>,
}

/// Assigns longest-path levels with DFF incoming edges removed.
///
/// PIs get level 0 and DFFs level 1; any other node is one above its deepest
/// predecessor. Fails if the cycle-broken view still contains a cycle.
pub fn levelize(nodes: &[Node]) -> Result<Levelization, NetlistError> {
    let n = nodes.len();
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (v, node) in nodes.iter().enumerate() {
        if node.kind == NodeKind::Dff {
            continue;
        }
        for &u in &node.fanins {
            indeg[v] += 1;
            succ[u].push(v);
        }
    }

    let mut levels = vec![0u32; n];
    let mut queue: Vec<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    for &v in &queue {
        levels[v] = if nodes[v].kind == NodeKind::Dff { 1 } else { 0 };
    }
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for &v in &succ[u] {
            levels[v] = levels[v].max(levels[u] + 1);
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push(v);
            }
        }
    }
    if queue.len() != n {
        let names = (0..n)
            .filter(|&v| indeg[v] > 0)
            .map(|v| nodes[v].name.clone())
            .collect();
        return Err(NetlistError::CombinationalCycle { names });
    }

    let depth = levels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut batches = vec![Vec::new(); depth];
    for (v, &l) in levels.iter().enumerate() {
        batches[l as usize].push(v);
    }
    Ok(Levelization { levels, batches })
}

/// A validated, levelized sequential AIG. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGraph {
    name: String,
    nodes: Vec<Node>,
    outputs: Vec<NodeId>,
    levels: Vec<u32>,
    batches: Vec<Vec<NodeId>>,
    /// Successors in the cycle-broken view.
    fanouts: Vec<Vec<NodeId>>,
    pis: Vec<NodeId>,
    dffs: Vec<NodeId>,
}

impl CircuitGraph {
    pub fn new(name: impl Into<String>, nodes: Vec<Node>, outputs: Vec<NodeId>) -> Result<Self, NetlistError> {
        let n = nodes.len();
        for (v, node) in nodes.iter().enumerate() {
            if node.fanins.len() != node.kind.arity() {
                return Err(NetlistError::Arity {
                    name: node.name.clone(),
                    kind: node.kind.to_string(),
                    expected: node.kind.arity().to_string(),
                    found: node.fanins.len(),
                });
            }
            if let Some(&u) = node.fanins.iter().find(|&&u| u >= n) {
                return Err(NetlistError::DanglingEdge { node: v, fanin: u });
            }
        }
        if let Some(&o) = outputs.iter().find(|&&o| o >= n) {
            return Err(NetlistError::DanglingEdge { node: o, fanin: o });
        }
        let Levelization { levels, batches } = levelize(&nodes)?;

        let mut fanouts = vec![Vec::new(); n];
        for (v, node) in nodes.iter().enumerate() {
            if node.kind == NodeKind::Dff {
                continue;
            }
            for &u in &node.fanins {
                fanouts[u].push(v);
            }
        }
        let pis = (0..n).filter(|&v| nodes[v].kind == NodeKind::Pi).collect();
        let dffs = (0..n).filter(|&v| nodes[v].kind == NodeKind::Dff).collect();
        Ok(CircuitGraph {
            name: name.into(),
            nodes,
            outputs,
            levels,
            batches,
            fanouts,
            pis,
            dffs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v]
    }

    pub fn kind(&self, v: NodeId) -> NodeKind {
        self.nodes[v].kind
    }

    pub fn fanins(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v].fanins
    }

    /// Successors of `v` in the cycle-broken view (DFF inputs excluded).
    pub fn fanouts(&self, v: NodeId) -> &[NodeId] {
        &self.fanouts[v]
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn level(&self, v: NodeId) -> u32 {
        self.levels[v]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Nodes grouped by level, ascending.
    pub fn level_batches(&self) -> &[Vec<NodeId>] {
        &self.batches
    }

    /// Primary inputs in node-id order; workloads index PIs in this order.
    pub fn pis(&self) -> &[NodeId] {
        &self.pis
    }

    pub fn dffs(&self) -> &[NodeId] {
        &self.dffs
    }

    pub fn pi_names(&self) -> Vec<String> {
        self.pis.iter().map(|&v| self.nodes[v].name.clone()).collect()
    }

    /// Combinational nodes in ascending level order.
    pub fn comb_order(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.batches
            .iter()
            .flatten()
            .copied()
            .filter(|&v| self.nodes[v].kind.is_combinational())
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Edges of the full graph as (src, dst).
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(v, n)| n.fanins.iter().map(move |&u| (u, v)))
    }

    pub fn features(&self) -> Vec<[f64; 4]> {
        self.nodes.iter().map(|n| n.kind.one_hot()).collect()
    }

    /// Writes the graph in the bench-style netlist grammar. The first line is
    /// a `# circuit <name>` comment that the parser picks up as the name.
    pub fn to_netlist_text(&self) -> String {
        let mut out = format!("# circuit {}\n", self.name);
        for node in &self.nodes {
            match node.kind {
                NodeKind::Pi => out.push_str(&format!("INPUT({})\n", node.name)),
                kind => {
                    let args: Vec<&str> = node.fanins.iter().map(|&u| self.nodes[u].name.as_str()).collect();
                    out.push_str(&format!("{} = {}({})\n", node.name, kind, args.join(", ")));
                }
            }
        }
        for &o in &self.outputs {
            out.push_str(&format!("OUTPUT({})\n", self.nodes[o].name));
        }
        out
    }

    /// Returns a copy with node ids relabeled: node `v` becomes `perm[v]`.
    /// Level batches are rebuilt, so the result is a valid graph.
    pub fn permuted(&self, perm: &[NodeId]) -> CircuitGraph {
        let n = self.len();
        assert_eq!(perm.len(), n, "permutation length");
        let mut nodes: Vec<Option<Node>> = vec![None; n];
        for (v, node) in self.nodes.iter().enumerate() {
            nodes[perm[v]] = Some(Node {
                name: node.name.clone(),
                kind: node.kind,
                fanins: node.fanins.iter().map(|&u| perm[u]).collect(),
            });
        }
        let nodes = nodes.into_iter().map(|n| n.expect("perm is a bijection")).collect();
        let outputs = self.outputs.iter().map(|&o| perm[o]).collect();
        CircuitGraph::new(self.name.clone(), nodes, outputs).expect("relabeling preserves validity")
    }
}

impl fmt::Display for CircuitGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_netlist_text())
    }
}
