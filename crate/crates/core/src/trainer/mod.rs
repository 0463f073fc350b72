// SPDX-License-Identifier: Apache-2.0
//! Datasets, multi-task training, evaluation and fine-tuning.

mod dataset;
mod finetune;
mod metrics;
mod train;

pub use dataset::{
    attach_error_labels, build_dataset, Dataset, DatasetManifest, DatasetSpec, Entry, EntryMeta, Split,
    DATASET_FORMAT_VERSION,
};
pub use finetune::{
    fine_tune_reliability, fine_tune_workloads, workload_entries, WorkloadFineTune, WorkloadFineTuneReport,
};
pub use metrics::{compare_labels, evaluate, evaluate_constant, ConstantPredictor, Metrics};
pub use train::{fit, train, EpochRecord, RunRecord, TrainConfig};

use crate::gnn::GnnError;
use crate::netlist::NetlistError;
use crate::sim::SimError;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{file}: {source}")]
    Netlist { file: String, source: NetlistError },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("invalid dataset spec: {0}")]
    Spec(String),
    #[error("no training circuits")]
    EmptyDataset,
    #[error("manifest: {0}")]
    Manifest(String),
}

impl TrainError {
    /// True for failures caused by NaN/inf values rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, TrainError::Gnn(GnnError::NonFiniteLoss(_)))
            || matches!(
                self,
                TrainError::Gnn(GnnError::Tensor(crate::tensor::TensorError::NonFinite(_)))
            )
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> TrainError {
    TrainError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, TrainError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), TrainError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}
