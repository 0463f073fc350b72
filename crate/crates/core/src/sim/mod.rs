// SPDX-License-Identifier: Apache-2.0
//! Workloads, cycle-accurate simulation and supervision labels.

mod faults;
mod labels;
pub mod saif;
mod simulate;
mod workload;

pub use faults::{inject_faults, simulate_faulty, FaultConfig, FaultLabels};
pub use labels::{extract_labels, read_labels_csv, write_labels_csv, LabelSet};
pub use saif::{export_saif, parse_saif, SaifDoc, SaifNet};
pub use simulate::{simulate, Traces};
pub use workload::{random_workload, read_workload_csv, write_workload_csv, BitTrace, Workload};

use thiserror::Error;

/// Default pattern length for label generation.
pub const DEFAULT_CYCLES: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("workload drives {found} primary inputs, circuit has {expected}")]
    PiCountMismatch { expected: usize, found: usize },
    #[error("need at least 2 cycles, got {0}")]
    TooFewCycles(usize),
    #[error("labels cover {found} nodes, circuit has {expected}")]
    LabelCountMismatch { expected: usize, found: usize },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Mixes a base seed with a stream index (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
