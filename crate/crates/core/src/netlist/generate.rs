// SPDX-License-Identifier: Apache-2.0
//! Seeded synthetic sequential AIG generator.

use super::{CircuitGraph, Node, NodeId, NodeKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Fraction of generated gates that are 2-input ANDs; the rest are NOTs.
const AND_RATIO: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_pi: usize,
    pub n_gates: usize,
    pub n_ff: usize,
    pub seed: u64,
}

impl GenParams {
    /// Clamps to the valid domain (at least one PI and one gate) and returns
    /// a note for every adjusted field.
    pub fn clamped(self) -> (GenParams, Vec<String>) {
        let mut notes = Vec::new();
        let mut p = self;
        if p.n_pi == 0 {
            notes.push("n_pi clamped from 0 to 1".to_string());
            p.n_pi = 1;
        }
        if p.n_gates == 0 {
            notes.push("n_gates clamped from 0 to 1".to_string());
            p.n_gates = 1;
        }
        (p, notes)
    }
}

/// Generates a random sequential AIG.
///
/// Node ids are laid out as PIs, then DFFs, then gates. Gate inputs are
/// drawn from already-created nodes, so the cycle-broken view is acyclic by
/// construction; DFF data inputs are drawn from gates whose combinational
/// cone contains a PI, which keeps every node reachable from some PI.
/// Gates without fanout become outputs.
pub fn generate_random_circuit(n_pi: usize, n_gates: usize, n_ff: usize, seed: u64) -> CircuitGraph {
    let (p, notes) = GenParams {
        n_pi,
        n_gates,
        n_ff,
        seed,
    }
    .clamped();
    for note in notes {
        log::warn!("generate_random_circuit: {note}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.n_pi + p.n_ff + p.n_gates;
    let gate0 = p.n_pi + p.n_ff;

    let mut nodes: Vec<Node> = Vec::with_capacity(n);
    for i in 0..p.n_pi {
        nodes.push(Node {
            name: format!("pi{i}"),
            kind: NodeKind::Pi,
            fanins: Vec::new(),
        });
    }
    for i in 0..p.n_ff {
        nodes.push(Node {
            name: format!("ff{i}"),
            kind: NodeKind::Dff,
            fanins: Vec::new(),
        });
    }

    let mut unused_pis: Vec<NodeId> = (0..p.n_pi).collect();
    unused_pis.shuffle(&mut rng);
    // gates whose combinational fanin cone reaches a PI
    let mut pi_cone = vec![false; n];
    for v in 0..p.n_pi {
        pi_cone[v] = true;
    }

    for i in 0..p.n_gates {
        let id = gate0 + i;
        let avail = id;
        let want_and = rng.gen_bool(AND_RATIO) && avail >= 2;
        let mut fanins = Vec::with_capacity(2);
        if let Some(pi) = unused_pis.pop() {
            fanins.push(pi);
        } else {
            fanins.push(rng.gen_range(0..avail));
        }
        if want_and {
            let mut other = rng.gen_range(0..avail - 1);
            if other >= fanins[0] {
                other += 1;
            }
            fanins.push(other);
        }
        pi_cone[id] = fanins.iter().any(|&u| nodes[u].kind != NodeKind::Dff && pi_cone[u]);
        nodes.push(Node {
            name: format!("g{i}"),
            kind: if want_and { NodeKind::And } else { NodeKind::Not },
            fanins,
        });
    }

    let anchored: Vec<NodeId> = (gate0..n).filter(|&v| pi_cone[v]).collect();
    for f in p.n_pi..gate0 {
        let d = *anchored.choose(&mut rng).expect("first gate always reads a PI");
        nodes[f].fanins.push(d);
    }

    let mut has_fanout = vec![false; n];
    for node in &nodes {
        for &u in &node.fanins {
            has_fanout[u] = true;
        }
    }
    let mut outputs: Vec<NodeId> = (gate0..n).filter(|&v| !has_fanout[v]).collect();
    if outputs.is_empty() {
        outputs.push(n - 1);
    }
    CircuitGraph::new(format!("rand_s{}", p.seed), nodes, outputs).expect("generator output is valid by construction")
}
