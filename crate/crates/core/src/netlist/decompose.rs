// SPDX-License-Identifier: Apache-2.0
//! Literal AND/NOT decomposition of multi-type gate netlists.
//!
//! No logic optimization is applied: each original gate becomes a fixed
//! AND/NOT pattern whose last node (the fanout node) carries the original
//! gate's name and function. Helper nodes are named `<gate>__d<k>`.

use super::{CircuitGraph, GateKind, GateNetlist, NetlistError, Node, NodeId, NodeKind};

/// Maps each original gate id to the node that computes its function.
pub type FanoutMap = Vec<NodeId>;

#[derive(Debug, Clone)]
pub struct Decomposed {
    pub graph: CircuitGraph,
    pub fanout_map: FanoutMap,
}

impl Decomposed {
    /// True if `v` is the fanout node of some original gate.
    pub fn recorded_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.graph.len()];
        for &v in &self.fanout_map {
            mask[v] = true;
        }
        mask
    }
}

/// Template instruction list: operands are either original fanins (`In`) or
/// earlier template nodes (`Tmp`).
#[derive(Clone, Copy)]
enum Operand {
    In(usize),
    Tmp(usize),
}

enum Step {
    And(Operand, Operand),
    Not(Operand),
}

fn and_chain(steps: &mut Vec<Step>, ops: &[Operand]) -> Operand {
    let mut acc = ops[0];
    for &o in &ops[1..] {
        steps.push(Step::And(acc, o));
        acc = Operand::Tmp(steps.len() - 1);
    }
    acc
}

fn not(steps: &mut Vec<Step>, o: Operand) -> Operand {
    steps.push(Step::Not(o));
    Operand::Tmp(steps.len() - 1)
}

/// Two-input XOR from four NANDs: t = NAND(a,b); NAND(NAND(a,t), NAND(b,t)).
fn xor2(steps: &mut Vec<Step>, a: Operand, b: Operand) -> Operand {
    let nand = |steps: &mut Vec<Step>, x, y| {
        steps.push(Step::And(x, y));
        let t = Operand::Tmp(steps.len() - 1);
        not(steps, t)
    };
    let t = nand(steps, a, b);
    let l = nand(steps, a, t);
    let r = nand(steps, b, t);
    nand(steps, l, r)
}

fn template(kind: GateKind, arity: usize) -> Vec<Step> {
    let ins: Vec<Operand> = (0..arity).map(Operand::In).collect();
    let mut s = Vec::new();
    match kind {
        GateKind::Input | GateKind::Dff => unreachable!("handled directly"),
        GateKind::And => {
            and_chain(&mut s, &ins);
        }
        GateKind::Not => {
            not(&mut s, ins[0]);
        }
        GateKind::Buf => {
            let n = not(&mut s, ins[0]);
            not(&mut s, n);
        }
        GateKind::Nand => {
            let a = and_chain(&mut s, &ins);
            not(&mut s, a);
        }
        GateKind::Or => {
            let negs: Vec<Operand> = ins.iter().map(|&i| not(&mut s, i)).collect();
            let a = and_chain(&mut s, &negs);
            not(&mut s, a);
        }
        GateKind::Nor => {
            let negs: Vec<Operand> = ins.iter().map(|&i| not(&mut s, i)).collect();
            and_chain(&mut s, &negs);
        }
        GateKind::Xor | GateKind::Xnor => {
            let mut acc = ins[0];
            for &i in &ins[1..] {
                acc = xor2(&mut s, acc, i);
            }
            if kind == GateKind::Xnor {
                not(&mut s, acc);
            }
        }
    }
    s
}

/// Rewrites every non-AIG gate as AND/NOT nodes.
///
/// AIG-only input maps to an identical graph with an identity fanout map.
pub fn decompose_gates(gn: &GateNetlist) -> Result<Decomposed, NetlistError> {
    let templates: Vec<Option<Vec<Step>>> = gn
        .gates
        .iter()
        .map(|g| match g.kind {
            GateKind::Input | GateKind::Dff => None,
            GateKind::And if g.fanins.len() == 2 => None,
            GateKind::Not => None,
            k => Some(template(k, g.fanins.len())),
        })
        .collect();

    // First pass: fix the id of every fanout node so forward references
    // (through DFFs) can be resolved while emitting.
    let mut fanout_map = Vec::with_capacity(gn.gates.len());
    let mut next = 0usize;
    for t in &templates {
        next += t.as_ref().map_or(1, |s| s.len());
        fanout_map.push(next - 1);
    }

    let mut nodes = Vec::with_capacity(next);
    for (g, t) in gn.gates.iter().zip(&templates) {
        let fanins: Vec<NodeId> = g.fanins.iter().map(|&u| fanout_map[u]).collect();
        match t {
            None => {
                let kind = match g.kind {
                    GateKind::Input => NodeKind::Pi,
                    GateKind::And => NodeKind::And,
                    GateKind::Not => NodeKind::Not,
                    GateKind::Dff => NodeKind::Dff,
                    _ => unreachable!(),
                };
                nodes.push(Node {
                    name: g.name.clone(),
                    kind,
                    fanins,
                });
            }
            Some(steps) => {
                let base = nodes.len();
                let resolve = |o: Operand| match o {
                    Operand::In(i) => fanins[i],
                    Operand::Tmp(k) => base + k,
                };
                for (k, step) in steps.iter().enumerate() {
                    let name = if k + 1 == steps.len() {
                        g.name.clone()
                    } else {
                        format!("{}__d{}", g.name, k)
                    };
                    let (kind, fi) = match *step {
                        Step::And(a, b) => (NodeKind::And, vec![resolve(a), resolve(b)]),
                        Step::Not(a) => (NodeKind::Not, vec![resolve(a)]),
                    };
                    nodes.push(Node { name, kind, fanins: fi });
                }
            }
        }
    }
    let outputs = gn.outputs.iter().map(|&o| fanout_map[o]).collect();
    let graph = CircuitGraph::new(gn.name.clone(), nodes, outputs)?;
    Ok(Decomposed { graph, fanout_map })
}
