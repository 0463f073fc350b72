// SPDX-License-Identifier: Apache-2.0
//! Per-circuit propagation schedule, built once and reused across passes.

use crate::netlist::{CircuitGraph, NodeId, NodeKind};
use crate::tensor::Segments;
use ndarray::Array2;
use std::sync::Arc;

/// Nodes of one level updated together, with their neighbor lists
/// flattened into edge rows grouped by node.
#[derive(Debug, Clone)]
pub(crate) struct Batch {
    pub nodes: Vec<NodeId>,
    /// Neighbor of each edge row.
    pub neighbors: Vec<NodeId>,
    /// Batch row owning each edge row.
    pub owners: Vec<usize>,
    pub segments: Arc<Segments>,
    pub features: Array2<f64>,
}

impl Batch {
    fn new(g: &CircuitGraph, nodes: Vec<NodeId>, adj: impl Fn(NodeId) -> Vec<NodeId>) -> Self {
        let lists: Vec<Vec<NodeId>> = nodes.iter().map(|&v| adj(v)).collect();
        let segments = Arc::new(Segments::from_counts(lists.iter().map(Vec::len)));
        let owners = segments.owners();
        let features = Array2::from_shape_fn((nodes.len(), 4), |(i, k)| g.kind(nodes[i]).one_hot()[k]);
        Batch {
            nodes,
            neighbors: lists.into_iter().flatten().collect(),
            owners,
            segments,
            features,
        }
    }
}

/// Propagation schedule of one circuit.
#[derive(Debug, Clone)]
pub struct PreparedCircuit {
    pub(crate) graph: CircuitGraph,
    pub(crate) forward: Vec<Batch>,
    pub(crate) reverse: Vec<Batch>,
    /// (flip-flop, data input) pairs.
    pub(crate) dff_copy: Vec<(NodeId, NodeId)>,
}

impl PreparedCircuit {
    pub fn new(g: &CircuitGraph) -> Self {
        let comb = |batch: &Vec<NodeId>| -> Vec<NodeId> {
            batch
                .iter()
                .copied()
                .filter(|&v| g.kind(v).is_combinational())
                .collect()
        };
        let forward = g
            .level_batches()
            .iter()
            .map(comb)
            .filter(|b| !b.is_empty())
            .map(|b| Batch::new(g, b, |v| g.fanins(v).to_vec()))
            .collect();
        // Nodes without successors in the cycle-broken view have nothing to
        // aggregate and keep their forward-layer state.
        let reverse = g
            .level_batches()
            .iter()
            .rev()
            .map(|b| {
                comb(b)
                    .into_iter()
                    .filter(|&v| !g.fanouts(v).is_empty())
                    .collect::<Vec<_>>()
            })
            .filter(|b| !b.is_empty())
            .map(|b| Batch::new(g, b, |v| g.fanouts(v).to_vec()))
            .collect();
        let dff_copy = g.dffs().iter().map(|&d| (d, g.fanins(d)[0])).collect();
        debug_assert!(g.dffs().iter().all(|&d| g.kind(d) == NodeKind::Dff));
        PreparedCircuit {
            graph: g.clone(),
            forward,
            reverse,
            dff_copy,
        }
    }

    pub fn graph(&self) -> &CircuitGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Node count of each forward-layer batch.
    pub fn forward_batch_sizes(&self) -> Vec<usize> {
        self.forward.iter().map(|b| b.nodes.len()).collect()
    }

    /// Node count of each reverse-layer batch.
    pub fn reverse_batch_sizes(&self) -> Vec<usize> {
        self.reverse.iter().map(|b| b.nodes.len()).collect()
    }
}
