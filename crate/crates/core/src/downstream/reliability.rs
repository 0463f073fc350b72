// SPDX-License-Identifier: Apache-2.0
//! Circuit reliability score from per-node error probabilities.
//!
//! score = 1 − mean over outputs of [(1 − p)·err01 + p·err10], the expected
//! probability that an output is correct in a given cycle.

use super::DownstreamError;
use crate::netlist::CircuitGraph;
use crate::sim::LabelSet;
use serde::{Deserialize, Serialize};

fn check(name: &'static str, xs: &[f64], n: usize) -> Result<(), DownstreamError> {
    if xs.len() != n {
        return Err(DownstreamError::Length {
            what: name,
            expected: n,
            found: xs.len(),
        });
    }
    if let Some((v, &x)) = xs.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(DownstreamError::OutOfRange { node: v, value: x });
    }
    Ok(())
}

pub fn estimate_reliability(
    g: &CircuitGraph,
    logic_prob: &[f64],
    err01: &[f64],
    err10: &[f64],
) -> Result<f64, DownstreamError> {
    if g.outputs().is_empty() {
        return Err(DownstreamError::NoOutputs);
    }
    check("logic_prob", logic_prob, g.len())?;
    check("err01", err01, g.len())?;
    check("err10", err10, g.len())?;
    let failure: f64 = g
        .outputs()
        .iter()
        .map(|&v| (1.0 - logic_prob[v]) * err01[v] + logic_prob[v] * err10[v])
        .sum::<f64>()
        / g.outputs().len() as f64;
    Ok(1.0 - failure)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub err01: Vec<f64>,
    pub err10: Vec<f64>,
    pub circuit_score: f64,
    pub ground_truth_score: Option<f64>,
    /// |score − ground truth| / ground truth.
    pub rel_error: Option<f64>,
}

fn errors(l: &LabelSet) -> Result<(&[f64], &[f64]), DownstreamError> {
    match (&l.err01, &l.err10) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(DownstreamError::Length {
            what: "error probabilities",
            expected: l.len(),
            found: 0,
        }),
    }
}

/// Scores `estimate` and, when given, `truth`; each uses its own logic
/// probabilities.
pub fn reliability_report(
    g: &CircuitGraph,
    estimate: &LabelSet,
    truth: Option<&LabelSet>,
) -> Result<ReliabilityReport, DownstreamError> {
    let (e01, e10) = errors(estimate)?;
    let score = estimate_reliability(g, &estimate.logic_prob, e01, e10)?;
    let gt = truth
        .map(|t| {
            let (t01, t10) = errors(t)?;
            estimate_reliability(g, &t.logic_prob, t01, t10)
        })
        .transpose()?;
    Ok(ReliabilityReport {
        err01: e01.to_vec(),
        err10: e10.to_vec(),
        circuit_score: score,
        ground_truth_score: gt,
        rel_error: gt.map(|r| (score - r).abs() / r),
    })
}
