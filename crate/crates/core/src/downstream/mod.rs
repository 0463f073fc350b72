// SPDX-License-Identifier: Apache-2.0
//! Dynamic power and reliability estimates from node probabilities.

mod power;
mod reliability;
mod testbench;

pub use power::{compare_power, estimate_power, power_from_saif, PowerComparison, PowerModel};
pub use reliability::{estimate_reliability, reliability_report, ReliabilityReport};
pub use testbench::{parse_testbench, write_testbench};

use crate::netlist::{CircuitGraph, NodeId};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DownstreamError {
    #[error("no probability for recorded node {0}")]
    MissingProbability(NodeId),
    #[error("invalid power model: {0}")]
    PowerModel(String),
    #[error("circuit has no primary outputs")]
    NoOutputs,
    #[error("{what}: expected {expected} values, found {found}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("value {value} for node {node} is outside [0, 1]")]
    OutOfRange { node: NodeId, value: f64 },
    #[error("SAIF net `{0}` does not match the circuit")]
    SaifMismatch(String),
    #[error("testbench line {line}: {msg}")]
    Testbench { line: usize, msg: String },
}

/// Every node of `g`, for circuits that were not decomposed.
pub fn all_nodes(g: &CircuitGraph) -> Vec<NodeId> {
    (0..g.len()).collect()
}
