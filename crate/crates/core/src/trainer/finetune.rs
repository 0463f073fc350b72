// SPDX-License-Identifier: Apache-2.0
//! Fine-tuning on many workloads of one circuit and on error labels.

use super::{fit, ConstantPredictor, Entry, EntryMeta, Metrics, RunRecord, TrainConfig, TrainError};
use crate::gnn::{GnnError, Model, Objective};
use crate::netlist::CircuitGraph;
use crate::sim::{derive_seed, random_workload, DEFAULT_CYCLES};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadFineTune {
    pub n_workloads: usize,
    pub n_heldout: usize,
    pub n_cycles: usize,
    /// Workload `k` uses seed `derive_seed(seed, k)`; held-out workloads
    /// continue the sequence after the training ones.
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for WorkloadFineTune {
    fn default() -> Self {
        WorkloadFineTune {
            n_workloads: 1000,
            n_heldout: 5,
            n_cycles: DEFAULT_CYCLES,
            seed: 0,
            train: TrainConfig {
                epochs: 10,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadFineTuneReport {
    pub circuit: String,
    pub config: WorkloadFineTune,
    /// Held-out metrics before and after fine-tuning.
    pub before: Option<Metrics>,
    pub after: Option<Metrics>,
    pub record: RunRecord,
}

/// `count` simulated workloads of `g`, numbered from `first`.
pub fn workload_entries(
    g: &CircuitGraph,
    count: usize,
    n_cycles: usize,
    seed: u64,
    first: usize,
) -> Result<Vec<Entry>, TrainError> {
    (first..first + count)
        .into_par_iter()
        .map(|k| {
            let workload_seed = derive_seed(seed, k as u64);
            let w = random_workload(g, n_cycles, workload_seed)?;
            let meta = EntryMeta {
                name: format!("{}_w{k:04}", g.name()),
                nodes: g.len(),
                n_pi: g.pis().len(),
                n_gates: g.len() - g.pis().len() - g.dffs().len(),
                n_ff: g.dffs().len(),
                circuit_seed: 0,
                workload_seed,
                n_cycles,
            };
            Entry::simulated(meta, g.clone(), w)
        })
        .collect()
}

/// Generates `n_workloads` training and `n_heldout` evaluation workloads
/// for `g` and continues training all of `model`'s parameters on them.
pub fn fine_tune_workloads(
    model: &mut Model,
    g: &CircuitGraph,
    cfg: &WorkloadFineTune,
) -> Result<(WorkloadFineTuneReport, Vec<Entry>), TrainError> {
    let train = workload_entries(g, cfg.n_workloads, cfg.n_cycles, cfg.seed, 0)?;
    let heldout = workload_entries(g, cfg.n_heldout, cfg.n_cycles, cfg.seed, cfg.n_workloads)?;
    let record = fit(
        model,
        &train.iter().collect::<Vec<_>>(),
        &heldout.iter().collect::<Vec<_>>(),
        &cfg.train,
        Objective::Probabilities,
    )?;
    let report = WorkloadFineTuneReport {
        circuit: g.name().to_string(),
        config: *cfg,
        before: record.initial_val,
        after: record.final_val(),
        record,
    };
    Ok((report, heldout))
}

/// Attaches a fresh error head (seeded by `head_seed`) and trains the whole
/// model with L1 on (err01, err10).
pub fn fine_tune_reliability(
    model: &mut Model,
    train: &[&Entry],
    val: &[&Entry],
    cfg: &TrainConfig,
    head_seed: u64,
) -> Result<RunRecord, TrainError> {
    if let Some(e) = train.iter().chain(val).find(|e| !e.labels.has_errors()) {
        log::error!("circuit {} has no error labels", e.meta.name);
        return Err(GnnError::MissingErrorLabels.into());
    }
    model.add_error_head(head_seed);
    let base = ConstantPredictor::fit(train);
    model.set_error_prior(base.err01.unwrap_or(0.0), base.err10.unwrap_or(0.0))?;
    fit(model, train, val, cfg, Objective::Errors)
}
