// SPDX-License-Identifier: Apache-2.0

use super::{BitTrace, SimError, Workload};
use crate::netlist::{CircuitGraph, NodeId, NodeKind};
use rand::Rng;

/// Per-node value traces, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub n_cycles: usize,
    pub nodes: Vec<BitTrace>,
}

/// Evaluation program shared by the fault-free and faulty simulators.
pub(crate) struct Program {
    pub pis: Vec<NodeId>,
    /// (dff, data input)
    pub dffs: Vec<(NodeId, NodeId)>,
    /// (node, kind, fanin0, fanin1) in level order
    pub comb: Vec<(NodeId, NodeKind, NodeId, NodeId)>,
    pub n: usize,
}

impl Program {
    pub fn new(g: &CircuitGraph) -> Self {
        let comb = g
            .comb_order()
            .map(|v| {
                let f = g.fanins(v);
                (v, g.kind(v), f[0], *f.get(1).unwrap_or(&f[0]))
            })
            .collect();
        Program {
            pis: g.pis().to_vec(),
            dffs: g.dffs().iter().map(|&d| (d, g.fanins(d)[0])).collect(),
            comb,
            n: g.len(),
        }
    }

    /// Evaluates one cycle into `vals`. `state` holds DFF outputs for this
    /// cycle and is overwritten with the next state. With a fault source,
    /// each gate and DFF output flips with probability `rate`.
    #[inline]
    pub fn step<R: Rng>(
        &self,
        pi_vals: impl Iterator<Item = bool>,
        state: &mut [bool],
        vals: &mut [bool],
        faults: Option<(&mut R, f64)>,
    ) {
        for (&p, b) in self.pis.iter().zip(pi_vals) {
            vals[p] = b;
        }
        match faults {
            None => {
                for (k, &(d, _)) in self.dffs.iter().enumerate() {
                    vals[d] = state[k];
                }
                for &(v, kind, a, b) in &self.comb {
                    vals[v] = match kind {
                        NodeKind::And => vals[a] && vals[b],
                        _ => !vals[a],
                    };
                }
            }
            Some((rng, rate)) => {
                for (k, &(d, _)) in self.dffs.iter().enumerate() {
                    vals[d] = state[k] ^ rng.gen_bool(rate);
                }
                for &(v, kind, a, b) in &self.comb {
                    let x = match kind {
                        NodeKind::And => vals[a] && vals[b],
                        _ => !vals[a],
                    };
                    vals[v] = x ^ rng.gen_bool(rate);
                }
            }
        }
        for (k, &(_, data)) in self.dffs.iter().enumerate() {
            state[k] = vals[data];
        }
    }
}

/// Cycle-accurate zero-delay simulation.
///
/// At cycle t, DFF outputs hold the state latched at t−1 (0 at t=0),
/// combinational nodes evaluate in level order, and each DFF then latches
/// its data input's cycle-t value.
pub fn simulate(g: &CircuitGraph, w: &Workload) -> Result<Traces, SimError> {
    w.check_circuit(g)?;
    let prog = Program::new(g);
    let n_cycles = w.n_cycles();
    let pattern = w.pattern();
    let mut state = vec![false; prog.dffs.len()];
    let mut vals = vec![false; prog.n];
    let mut nodes: Vec<BitTrace> = (0..prog.n).map(|_| BitTrace::with_capacity(n_cycles)).collect();
    for t in 0..n_cycles {
        prog.step::<rand_chacha::ChaCha8Rng>(pattern.iter().map(|p| p.get(t)), &mut state, &mut vals, None);
        for (trace, &b) in nodes.iter_mut().zip(&vals) {
            trace.push(b);
        }
    }
    Ok(Traces { n_cycles, nodes })
}
