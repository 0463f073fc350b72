// SPDX-License-Identifier: Apache-2.0
//! Average prediction error pooled over every node of every circuit.

use super::{Entry, TrainError};
use crate::gnn::Model;
use crate::sim::LabelSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean |ŷ − y| over both transition columns.
    pub avg_pe_tr: f64,
    pub avg_pe_lg: f64,
    /// Mean |ŷ − y| over both error columns, when both sides carry them.
    pub avg_pe_err: Option<f64>,
    pub nodes: usize,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    tr: f64,
    lg: f64,
    err: f64,
    nodes: usize,
    with_err: bool,
}

fn abs_diff_sum(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn sums(pred: &LabelSet, truth: &LabelSet) -> Sums {
    let err = match (
        pred.err01.as_ref().zip(pred.err10.as_ref()),
        truth.err01.as_ref().zip(truth.err10.as_ref()),
    ) {
        (Some((p01, p10)), Some((t01, t10))) => Some(abs_diff_sum(p01, t01) + abs_diff_sum(p10, t10)),
        _ => None,
    };
    Sums {
        tr: abs_diff_sum(&pred.tr01, &truth.tr01) + abs_diff_sum(&pred.tr10, &truth.tr10),
        lg: abs_diff_sum(&pred.logic_prob, &truth.logic_prob),
        err: err.unwrap_or(0.0),
        nodes: truth.len(),
        with_err: err.is_some(),
    }
}

/// Per-circuit sums are reduced in entry order, so the result does not
/// depend on thread scheduling.
fn pool(parts: Vec<Sums>) -> Metrics {
    let mut s = Sums {
        with_err: !parts.is_empty(),
        ..Default::default()
    };
    for p in parts {
        s.tr += p.tr;
        s.lg += p.lg;
        s.err += p.err;
        s.nodes += p.nodes;
        s.with_err &= p.with_err;
    }
    let n = s.nodes.max(1) as f64;
    Metrics {
        avg_pe_tr: s.tr / (2.0 * n),
        avg_pe_lg: s.lg / n,
        avg_pe_err: s.with_err.then(|| s.err / (2.0 * n)),
        nodes: s.nodes,
    }
}

/// Evaluates `model` on `entries`; initial states use `seed` for every
/// circuit.
pub fn evaluate(model: &Model, entries: &[&Entry], seed: u64) -> Result<Metrics, TrainError> {
    let parts = entries
        .par_iter()
        .map(|e| {
            let pred = model.predict(&e.prepared, &e.workload, seed)?;
            Ok(sums(&pred.to_labels(), &e.labels))
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    Ok(pool(parts))
}

/// Predicts the training-set mean of every label for every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantPredictor {
    pub logic_prob: f64,
    pub tr01: f64,
    pub tr10: f64,
    pub err01: Option<f64>,
    pub err10: Option<f64>,
}

impl ConstantPredictor {
    pub fn fit(entries: &[&Entry]) -> ConstantPredictor {
        let n: usize = entries.iter().map(|e| e.labels.len()).sum();
        let n = n.max(1) as f64;
        let mean = |f: &dyn Fn(&LabelSet) -> Option<&Vec<f64>>| -> Option<f64> {
            let mut total = 0.0;
            for e in entries {
                total += f(&e.labels)?.iter().sum::<f64>();
            }
            Some(total / n)
        };
        ConstantPredictor {
            logic_prob: mean(&|l| Some(&l.logic_prob)).unwrap(),
            tr01: mean(&|l| Some(&l.tr01)).unwrap(),
            tr10: mean(&|l| Some(&l.tr10)).unwrap(),
            err01: mean(&|l| l.err01.as_ref()),
            err10: mean(&|l| l.err10.as_ref()),
        }
    }

    pub fn labels(&self, n: usize) -> LabelSet {
        LabelSet {
            logic_prob: vec![self.logic_prob; n],
            tr01: vec![self.tr01; n],
            tr10: vec![self.tr10; n],
            err01: self.err01.map(|e| vec![e; n]),
            err10: self.err10.map(|e| vec![e; n]),
        }
    }
}

pub fn evaluate_constant(c: &ConstantPredictor, entries: &[&Entry]) -> Metrics {
    pool(
        entries
            .iter()
            .map(|e| sums(&c.labels(e.labels.len()), &e.labels))
            .collect(),
    )
}

/// Metrics of arbitrary predictions against ground truth.
pub fn compare_labels(pred: &[LabelSet], truth: &[LabelSet]) -> Metrics {
    pool(pred.iter().zip(truth).map(|(p, t)| sums(p, t)).collect())
}
