// SPDX-License-Identifier: Apache-2.0
//! Synthetic labeled datasets and their on-disk layout.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/circuits/<name>.bench
//! <dir>/workloads/<name>.csv
//! <dir>/labels/<name>.csv
//! ```

use super::{read_to_string, write_file, TrainError};
use crate::gnn::PreparedCircuit;
use crate::netlist::{generate_random_circuit, parse_netlist, CircuitGraph};
use crate::sim::{
    derive_seed, extract_labels, inject_faults, random_workload, read_labels_csv, read_workload_csv, simulate,
    write_labels_csv, write_workload_csv, FaultConfig, LabelSet, Workload, DEFAULT_CYCLES,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Fractions of a circuit's nodes that are primary inputs and flip-flops.
const PI_FRACTION: f64 = 0.08;
const FF_FRACTION: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub count: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub n_cycles: usize,
    pub val_fraction: f64,
    #[serde(default)]
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            count: 200,
            min_nodes: 50,
            max_nodes: 300,
            n_cycles: DEFAULT_CYCLES,
            val_fraction: 0.1,
            test_fraction: 0.0,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Spec(m));
        if self.count == 0 {
            return bad("count must be positive".into());
        }
        if self.min_nodes < 5 || self.min_nodes > self.max_nodes {
            return bad(format!(
                "node range {}..={} must satisfy 5 <= min <= max",
                self.min_nodes, self.max_nodes
            ));
        }
        if self.n_cycles < 2 {
            return bad(format!("need at least 2 cycles, got {}", self.n_cycles));
        }
        let (v, t) = (self.val_fraction, self.test_fraction);
        if !(0.0..1.0).contains(&v) || !(0.0..1.0).contains(&t) || v + t >= 1.0 {
            return bad(format!(
                "split fractions val={v} test={t} must be in [0,1) and sum below 1"
            ));
        }
        Ok(())
    }

    /// (n_pi, n_gates, n_ff) of entry `i`; the total lies in the node range.
    fn sizes(&self, i: usize) -> (usize, usize, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 3 * i as u64));
        let n = rng.gen_range(self.min_nodes..=self.max_nodes);
        let n_pi = ((n as f64 * PI_FRACTION).round() as usize).max(2);
        let n_ff = ((n as f64 * FF_FRACTION).round() as usize).max(1);
        (n_pi, n - n_pi - n_ff, n_ff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub name: String,
    pub nodes: usize,
    pub n_pi: usize,
    pub n_gates: usize,
    pub n_ff: usize,
    pub circuit_seed: u64,
    pub workload_seed: u64,
    pub n_cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub spec: DatasetSpec,
    pub entries: Vec<EntryMeta>,
    pub split: Split,
    /// Fault-injection settings when error labels are attached.
    #[serde(default)]
    pub error_labels: Option<FaultConfig>,
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub meta: EntryMeta,
    pub graph: CircuitGraph,
    pub workload: Workload,
    pub labels: LabelSet,
    pub prepared: PreparedCircuit,
}

impl Entry {
    /// Simulates `w` on `graph` to produce the labels.
    pub fn simulated(meta: EntryMeta, graph: CircuitGraph, workload: Workload) -> Result<Entry, TrainError> {
        let labels = extract_labels(&simulate(&graph, &workload)?)?;
        let prepared = PreparedCircuit::new(&graph);
        Ok(Entry {
            meta,
            graph,
            workload,
            labels,
            prepared,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub entries: Vec<Entry>,
}

fn split(count: usize, val_fraction: f64, test_fraction: f64, seed: u64) -> Split {
    let mut ids: Vec<usize> = (0..count).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX)));
    let n_val = (count as f64 * val_fraction).round() as usize;
    let n_test = (count as f64 * test_fraction).round() as usize;
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Split {
        val: sorted(&ids[..n_val]),
        test: sorted(&ids[n_val..n_val + n_test]),
        train: sorted(&ids[n_val + n_test..]),
    }
}

/// Generates, simulates and labels every circuit; a pure function of `spec`.
pub fn build_dataset(spec: &DatasetSpec) -> Result<Dataset, TrainError> {
    spec.validate()?;
    let entries = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let (n_pi, n_gates, n_ff) = spec.sizes(i);
            let circuit_seed = derive_seed(spec.seed, 3 * i as u64 + 1);
            let workload_seed = derive_seed(spec.seed, 3 * i as u64 + 2);
            let g = generate_random_circuit(n_pi, n_gates, n_ff, circuit_seed);
            let name = format!("c{i:04}");
            let g = CircuitGraph::new(name.clone(), g.nodes().to_vec(), g.outputs().to_vec())
                .expect("renaming keeps a valid graph");
            let w = random_workload(&g, spec.n_cycles, workload_seed)?;
            let meta = EntryMeta {
                name,
                nodes: g.len(),
                n_pi,
                n_gates,
                n_ff,
                circuit_seed,
                workload_seed,
                n_cycles: spec.n_cycles,
            };
            Entry::simulated(meta, g, w)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        spec: spec.clone(),
        entries: entries.iter().map(|e| e.meta.clone()).collect(),
        split: split(spec.count, spec.val_fraction, spec.test_fraction, spec.seed),
        error_labels: None,
    };
    Ok(Dataset { manifest, entries })
}

/// Adds Monte Carlo err01/err10 labels to every entry. Entry `i` uses fault
/// seed `derive_seed(cfg.seed, i)`.
pub fn attach_error_labels(ds: &mut Dataset, cfg: &FaultConfig) -> Result<(), TrainError> {
    let labels = ds
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let c = FaultConfig {
                seed: derive_seed(cfg.seed, i as u64),
                ..*cfg
            };
            inject_faults(&e.graph, &e.workload, &c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (e, f) in ds.entries.iter_mut().zip(labels) {
        e.labels.err01 = Some(f.err01);
        e.labels.err10 = Some(f.err10);
    }
    ds.manifest.error_labels = Some(*cfg);
    Ok(())
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn select(&self, ids: &[usize]) -> Vec<&Entry> {
        ids.iter().map(|&i| &self.entries[i]).collect()
    }

    pub fn train(&self) -> Vec<&Entry> {
        self.select(&self.manifest.split.train)
    }

    pub fn val(&self) -> Vec<&Entry> {
        self.select(&self.manifest.split.val)
    }

    pub fn test(&self) -> Vec<&Entry> {
        self.select(&self.manifest.split.test)
    }

    pub fn save(&self, dir: &Path) -> Result<(), TrainError> {
        let manifest = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write_file(&dir.join("manifest.json"), &(manifest + "\n"))?;
        for e in &self.entries {
            let name = &e.meta.name;
            write_file(
                &dir.join("circuits").join(format!("{name}.bench")),
                &e.graph.to_netlist_text(),
            )?;
            write_file(
                &dir.join("workloads").join(format!("{name}.csv")),
                &write_workload_csv(&e.graph, &e.workload),
            )?;
            write_file(
                &dir.join("labels").join(format!("{name}.csv")),
                &write_labels_csv(&e.labels),
            )?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Dataset, TrainError> {
        let path = dir.join("manifest.json");
        let manifest: DatasetManifest = serde_json::from_str(&read_to_string(&path)?)
            .map_err(|e| TrainError::Manifest(format!("{}: {e}", path.display())))?;
        if manifest.format_version != DATASET_FORMAT_VERSION {
            return Err(TrainError::Manifest(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        let count = manifest.entries.len();
        let s = &manifest.split;
        let mut seen = vec![false; count];
        for &i in s.train.iter().chain(&s.val).chain(&s.test) {
            if i >= count || std::mem::replace(&mut seen[i], true) {
                return Err(TrainError::Manifest(format!(
                    "split index {i} is out of range or repeated"
                )));
            }
        }
        let entries = manifest
            .entries
            .par_iter()
            .map(|meta| {
                let name = &meta.name;
                let cpath = dir.join("circuits").join(format!("{name}.bench"));
                let graph = parse_netlist(&read_to_string(&cpath)?).map_err(|source| TrainError::Netlist {
                    file: cpath.display().to_string(),
                    source,
                })?;
                let wpath = dir.join("workloads").join(format!("{name}.csv"));
                let workload = read_workload_csv(&graph, &read_to_string(&wpath)?, meta.n_cycles, meta.workload_seed)
                    .map_err(|e| super::io_err(&wpath, e))?;
                let lpath = dir.join("labels").join(format!("{name}.csv"));
                let labels = read_labels_csv(&read_to_string(&lpath)?).map_err(|e| super::io_err(&lpath, e))?;
                if labels.len() != graph.len() {
                    return Err(super::io_err(
                        &lpath,
                        format!("{} label rows for {} nodes", labels.len(), graph.len()),
                    ));
                }
                let prepared = PreparedCircuit::new(&graph);
                Ok(Entry {
                    meta: meta.clone(),
                    graph,
                    workload,
                    labels,
                    prepared,
                })
            })
            .collect::<Result<Vec<_>, TrainError>>()?;
        Ok(Dataset { manifest, entries })
    }
}
