// SPDX-License-Identifier: Apache-2.0
//! Dense f64 matrices with tape-based reverse-mode differentiation.
//!
//! Values are row-major `ndarray` matrices; a vector of length d is a 1×d
//! (or d×1) matrix. Trainable tensors live in a [`ParamStore`]; a [`Tape`]
//! records one forward computation over them and [`Tape::backward`] returns
//! the gradient of a scalar with respect to every parameter it touched.

mod adam;
mod gradcheck;
mod gru;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckEntry, GradCheckReport};
pub use gru::{gru_cell, GruParams};
pub use tape::{Segments, Tape, Var};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{0} of an empty input")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable matrices, kept in registration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        self.index.insert(name.clone(), self.values.len());
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    /// Registers a `rows × cols` matrix drawn from U(−1/√fan_in, 1/√fan_in).
    pub fn add_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let value = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound));
        self.add(name, value)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.values[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn to_checkpoint(&self) -> ParamCheckpoint {
        let params = self
            .names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| {
                (
                    n.clone(),
                    StoredTensor {
                        shape: [v.nrows(), v.ncols()],
                        values: v.iter().copied().collect(),
                    },
                )
            })
            .collect();
        ParamCheckpoint {
            format_version: CHECKPOINT_VERSION,
            params,
        }
    }

    /// Overwrites every parameter from `ckpt`. Names and shapes must match
    /// exactly, with nothing missing or extra.
    pub fn load_checkpoint(&mut self, ckpt: &ParamCheckpoint) -> Result<(), TensorError> {
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(TensorError::Checkpoint(format!(
                "unsupported format version {}",
                ckpt.format_version
            )));
        }
        if let Some(extra) = ckpt.params.keys().find(|k| !self.index.contains_key(*k)) {
            return Err(TensorError::Checkpoint(format!("unexpected parameter `{extra}`")));
        }
        for (name, value) in self.names.iter().zip(self.values.iter_mut()) {
            let stored = ckpt
                .params
                .get(name)
                .ok_or_else(|| TensorError::Checkpoint(format!("missing parameter `{name}`")))?;
            let [r, c] = stored.shape;
            if (r, c) != value.dim() || stored.values.len() != r * c {
                return Err(TensorError::Checkpoint(format!(
                    "parameter `{name}`: stored shape {:?} does not match {:?}",
                    stored.shape,
                    value.dim()
                )));
            }
            *value = Array2::from_shape_vec((r, c), stored.values.clone()).expect("checked length");
        }
        Ok(())
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub shape: [usize; 2],
    /// Row-major.
    pub values: Vec<f64>,
}

/// JSON map name → (shape, row-major values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCheckpoint {
    pub format_version: u32,
    pub params: BTreeMap<String, StoredTensor>,
}

/// Gradients aligned with a [`ParamStore`]; `None` for untouched parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            grads: vec![None; store.len()],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Array2<f64>> {
        self.grads[id.0].as_ref()
    }

    pub(crate) fn set(&mut self, id: ParamId, g: Array2<f64>) {
        self.grads[id.0] = Some(g);
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().flatten().all(|g| g.iter().all(|x| x.is_finite()))
    }

    pub fn scale(&mut self, k: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.mapv_inplace(|x| x * k);
        }
    }
}

/// Numerically stable softmax of a non-empty score vector.
pub fn softmax_weights(scores: &[f64]) -> Result<Vec<f64>, TensorError> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.is_empty() {
        return Err(TensorError::Empty("softmax"));
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Mean absolute error and its subgradient, sign(pred − target)/N with 0 at
/// ties.
pub fn l1_loss(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>), TensorError> {
    if pred.dim() != target.dim() {
        return Err(TensorError::Shape {
            op: "l1_loss",
            left: pred.dim(),
            right: target.dim(),
        });
    }
    let n = pred.len().max(1) as f64;
    let loss = pred.iter().zip(target.iter()).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
    let grad = ndarray::Zip::from(pred)
        .and(target)
        .map_collect(|&p, &t| sign(p - t) / n);
    Ok((loss, grad))
}

#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
