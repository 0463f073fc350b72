// SPDX-License-Identifier: Apache-2.0
//! Representation learning for sequential gate-level netlists.

pub mod downstream;
pub mod gnn;
pub mod netlist;
pub mod sim;
pub mod tensor;
pub mod trainer;
