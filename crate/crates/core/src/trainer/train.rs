// SPDX-License-Identifier: Apache-2.0
//! Training loop: one circuit per optimizer step, seeded shuffle per epoch.

use super::{evaluate, Dataset, Entry, Metrics, TrainError};
use crate::gnn::{Model, ModelConfig, Objective};
use crate::sim::derive_seed;
use crate::tensor::{Adam, AdamConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Drives the visiting order and the initial node states of each step.
    pub seed: u64,
    /// Initial-state seed for validation passes.
    pub eval_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            lr: 1e-4,
            seed: 0,
            eval_seed: 0,
        }
    }
}

/// Mean per-step losses of one epoch, with `loss_total` the mean of the
/// per-step totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_tr: f64,
    pub loss_lg: f64,
    pub loss_err: f64,
    pub loss_total: f64,
    pub val: Option<Metrics>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub objective: Objective,
    pub train_circuits: Vec<String>,
    pub val_circuits: Vec<String>,
    /// Validation metrics before the first update.
    pub initial_val: Option<Metrics>,
    pub epochs: Vec<EpochRecord>,
    pub steps: u64,
    #[serde(default)]
    pub checkpoint: Option<String>,
    /// Kept out of the serialized record so reruns compare bit-identical.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

/// Equality ignores `wall_clock_s`.
impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        serde_json::to_value(self).ok() == serde_json::to_value(other).ok()
    }
}

impl RunRecord {
    pub fn final_val(&self) -> Option<Metrics> {
        self.epochs.last().and_then(|e| e.val).or(self.initial_val)
    }
}

/// Continues training `model` on `train` with `objective`, evaluating on
/// `val` (when non-empty) after every epoch.
pub fn fit(
    model: &mut Model,
    train: &[&Entry],
    val: &[&Entry],
    cfg: &TrainConfig,
    objective: Objective,
) -> Result<RunRecord, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let start = Instant::now();
    let validate = |m: &Model| -> Result<Option<Metrics>, TrainError> {
        if val.is_empty() {
            Ok(None)
        } else {
            evaluate(m, val, cfg.eval_seed).map(Some)
        }
    };
    let mut record = RunRecord {
        model: *model.config(),
        train: *cfg,
        objective,
        train_circuits: train.iter().map(|e| e.meta.name.clone()).collect(),
        val_circuits: val.iter().map(|e| e.meta.name.clone()).collect(),
        initial_val: validate(model)?,
        epochs: Vec::new(),
        steps: 0,
        checkpoint: None,
        wall_clock_s: 0.0,
    };
    let mut opt = Adam::new(AdamConfig {
        lr: cfg.lr,
        ..Default::default()
    });
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64)));
        let (mut tr, mut lg, mut err, mut total) = (0.0, 0.0, 0.0, 0.0);
        for &i in &order {
            let e = train[i];
            let step_seed = derive_seed(cfg.seed ^ 0x5eed, record.steps);
            let (loss, grads) = model.loss_and_grad(&e.prepared, &e.workload, &e.labels, objective, step_seed)?;
            if !grads.is_finite() {
                return Err(crate::gnn::GnnError::NonFiniteLoss(e.meta.name.clone()).into());
            }
            opt.step(model.store_mut(), &grads);
            record.steps += 1;
            tr += loss.tr;
            lg += loss.lg;
            err += loss.err;
            total += loss.total;
        }
        let k = train.len() as f64;
        let row = EpochRecord {
            epoch: epoch + 1,
            loss_tr: tr / k,
            loss_lg: lg / k,
            loss_err: err / k,
            loss_total: total / k,
            val: validate(model)?,
        };
        log::info!(
            "epoch {:>3}: loss {:.5} (tr {:.5}, lg {:.5}, err {:.5}){}",
            row.epoch,
            row.loss_total,
            row.loss_tr,
            row.loss_lg,
            row.loss_err,
            row.val
                .map(|m| format!(" | val pe tr {:.4} lg {:.4}", m.avg_pe_tr, m.avg_pe_lg))
                .unwrap_or_default()
        );
        record.epochs.push(row);
    }
    record.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Trains a fresh model on the dataset's train split, validating on its
/// validation split.
pub fn train(ds: &Dataset, config: ModelConfig, cfg: &TrainConfig) -> Result<(Model, RunRecord), TrainError> {
    let mut model = Model::new(config)?;
    let record = fit(&mut model, &ds.train(), &ds.val(), cfg, Objective::Probabilities)?;
    Ok((model, record))
}
