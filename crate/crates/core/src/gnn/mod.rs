// SPDX-License-Identifier: Apache-2.0
//! Graph neural network over sequential AIGs.
//!
//! One iteration of the customized propagation, with flip-flops already at
//! level 1 and their incoming edges removed:
//!
//! 1. forward layer: combinational nodes by ascending level, aggregating
//!    over predecessors (flip-flop states are read, never written);
//! 2. reverse layer: combinational nodes by descending level, aggregating
//!    over successors;
//! 3. every flip-flop takes a copy of its data input's state.
//!
//! Primary-input states are filled with the input's logic-1 probability and
//! never change. The baseline variants drop step 3 ([`Variant::DagRecGnn`])
//! or additionally run a single iteration ([`Variant::DagConvGnn`]).

mod check;
mod layers;
mod model;
mod prepare;

pub use check::{component_grad_checks, ComponentCheck};
pub use layers::Aggregator;
pub use model::{IterationStates, LossParts, Model, ModelCheckpoint, Objective, Predictions};
pub use prepare::PreparedCircuit;

use crate::netlist::CircuitGraph;
use crate::sim::{derive_seed, SimError, Workload};
use crate::tensor::TensorError;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnnError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("labels cover {found} nodes, circuit has {expected}")]
    LabelMismatch { expected: usize, found: usize },
    #[error("model has no error head")]
    MissingErrorHead,
    #[error("labels carry no error probabilities")]
    MissingErrorLabels,
    #[error("non-finite loss on circuit `{0}`")]
    NonFiniteLoss(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Forward, reverse and flip-flop copy, iterated T times.
    SeqGnn,
    /// Forward and reverse iterated T times; flip-flops stay at their
    /// initial state.
    DagRecGnn,
    /// One forward and one reverse pass.
    DagConvGnn,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::SeqGnn => "seq-gnn",
            Variant::DagRecGnn => "dag-rec-gnn",
            Variant::DagConvGnn => "dag-conv-gnn",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "seq-gnn" => Ok(Variant::SeqGnn),
            "dag-rec-gnn" => Ok(Variant::DagRecGnn),
            "dag-conv-gnn" => Ok(Variant::DagConvGnn),
            _ => Err(format!("unknown variant `{s}` (seq-gnn, dag-rec-gnn, dag-conv-gnn)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub aggregator: Aggregator,
    pub hidden_dim: usize,
    #[serde(rename = "T")]
    pub iterations: usize,
    pub seed: u64,
    /// A 2-output error-probability head is attached.
    #[serde(default)]
    pub error_head: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::SeqGnn,
            aggregator: Aggregator::DualAttention,
            hidden_dim: 64,
            iterations: 10,
            seed: 0,
            error_head: false,
        }
    }
}

impl ModelConfig {
    pub fn baseline(variant: Variant, aggregator: Aggregator) -> Self {
        ModelConfig {
            variant,
            aggregator,
            ..Default::default()
        }
    }

    /// Iterations actually run; the single-pass baseline ignores `iterations`.
    pub fn effective_iterations(&self) -> usize {
        match self.variant {
            Variant::DagConvGnn => 1,
            _ => self.iterations,
        }
    }

    pub fn validate(&self) -> Result<(), GnnError> {
        if self.hidden_dim == 0 {
            return Err(GnnError::Config("hidden_dim must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(GnnError::Config("T must be at least 1".into()));
        }
        Ok(())
    }
}

/// Hidden states of every node plus the rows that propagation must not touch.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStates {
    pub h: Array2<f64>,
    pub frozen: Vec<bool>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Initial hidden states: primary input i is the constant row
/// `pi_probs[i]` and frozen; every other row is uniform [0, 1).
///
/// Random rows are keyed by node name, so relabeling node ids permutes the
/// matrix rows without changing their contents.
pub fn init_states(g: &CircuitGraph, w: &Workload, hidden_dim: usize, seed: u64) -> Result<NodeStates, GnnError> {
    w.check_circuit(g)?;
    let mut h = Array2::zeros((g.len(), hidden_dim));
    let mut frozen = vec![false; g.len()];
    for (v, node) in g.nodes().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, fnv1a(&node.name)));
        for x in h.row_mut(v) {
            *x = rng.gen::<f64>();
        }
    }
    for (&v, &p) in g.pis().iter().zip(w.pi_probs()) {
        h.row_mut(v).fill(p);
        frozen[v] = true;
    }
    Ok(NodeStates { h, frozen })
}
