// SPDX-License-Identifier: Apache-2.0
//! Model parameters, propagation schedule and training objective.

use super::layers::{Layer, Mlp};
use super::prepare::{Batch, PreparedCircuit};
use super::{init_states, GnnError, ModelConfig, Variant};
use crate::sim::{derive_seed, LabelSet, Workload};
use crate::tensor::{Gradients, ParamCheckpoint, ParamId, ParamStore, Tape, Var};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Model outputs, one row per node, every entry in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    /// Columns tr01, tr10.
    pub tr: Array2<f64>,
    /// Column logic-1 probability.
    pub lg: Array2<f64>,
    /// Columns err01, err10 when the model has an error head.
    pub err: Option<Array2<f64>>,
}

impl Predictions {
    pub fn tr01(&self) -> Vec<f64> {
        self.tr.column(0).to_vec()
    }

    pub fn tr10(&self) -> Vec<f64> {
        self.tr.column(1).to_vec()
    }

    pub fn logic_prob(&self) -> Vec<f64> {
        self.lg.column(0).to_vec()
    }

    /// Predictions in label form; error columns are copied when present.
    pub fn to_labels(&self) -> LabelSet {
        LabelSet {
            logic_prob: self.logic_prob(),
            tr01: self.tr01(),
            tr10: self.tr10(),
            err01: self.err.as_ref().map(|e| e.column(0).to_vec()),
            err10: self.err.as_ref().map(|e| e.column(1).to_vec()),
        }
    }
}

/// What a training step fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// L1 on (tr01, tr10) plus L1 on logic probability.
    Probabilities,
    /// L1 on (err01, err10) through the error head.
    Errors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub tr: f64,
    pub lg: f64,
    pub err: f64,
    pub total: f64,
}

/// Node states at the end of each step of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStates {
    pub after_forward: Array2<f64>,
    pub after_reverse: Array2<f64>,
    pub after_copy: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub config: ModelConfig,
    pub params: ParamCheckpoint,
}

#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    store: ParamStore,
    forward: Layer,
    reverse: Layer,
    head_tr: Mlp,
    head_lg: Mlp,
    head_err: Option<Mlp>,
}

/// Row pointers: node v's current state is row `.1` of tape value `.0`.
type StatePtrs = Vec<(Var, usize)>;

struct Outputs {
    tr: Option<Var>,
    lg: Option<Var>,
    err: Option<Var>,
}

const ERROR_HEAD_STREAM: u64 = 0xE77;

impl Model {
    pub fn new(config: ModelConfig) -> Result<Model, GnnError> {
        config.validate()?;
        let h = config.hidden_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let forward = Layer::new(&mut store, "fwd", config.aggregator, h, &mut rng);
        let reverse = Layer::new(&mut store, "rev", config.aggregator, h, &mut rng);
        let head_tr = Mlp::new(&mut store, "head_tr", &[h, h, h, 2], &mut rng);
        let head_lg = Mlp::new(&mut store, "head_lg", &[h, h, h, 1], &mut rng);
        let mut model = Model {
            config: ModelConfig {
                error_head: false,
                ..config
            },
            store,
            forward,
            reverse,
            head_tr,
            head_lg,
            head_err: None,
        };
        if config.error_head {
            model.add_error_head(derive_seed(config.seed, ERROR_HEAD_STREAM));
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn has_error_head(&self) -> bool {
        self.head_err.is_some()
    }

    /// Attaches a freshly initialized error head (64→64→64→2), replacing
    /// any existing one. The replacement is deterministic in `seed`.
    pub fn add_error_head(&mut self, seed: u64) {
        let h = self.config.hidden_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match &self.head_err {
            Some(head) => {
                let ids: Vec<ParamId> = head.params().collect();
                let mut scratch = ParamStore::new();
                let fresh = Mlp::new(&mut scratch, "head_err", &[h, h, h, 2], &mut rng);
                for (dst, src) in ids.into_iter().zip(fresh.params()) {
                    *self.store.get_mut(dst) = scratch.get(src).clone();
                }
            }
            None => {
                self.head_err = Some(Mlp::new(&mut self.store, "head_err", &[h, h, h, 2], &mut rng));
            }
        }
        self.config.error_head = true;
    }

    /// Sets the error head's output bias to logit(`err01`), logit(`err10`),
    /// so the head starts near the given base rates.
    pub fn set_error_prior(&mut self, err01: f64, err10: f64) -> Result<(), GnnError> {
        let head = self.head_err.as_ref().ok_or(GnnError::MissingErrorHead)?;
        let bias = head.params().last().expect("head has layers");
        let logit = |p: f64| {
            let p = p.clamp(1e-9, 1.0 - 1e-9);
            (p / (1.0 - p)).ln()
        };
        let b = self.store.get_mut(bias);
        b[[0, 0]] = logit(err01);
        b[[0, 1]] = logit(err10);
        Ok(())
    }

    pub fn to_checkpoint(&self) -> ModelCheckpoint {
        ModelCheckpoint {
            config: self.config,
            params: self.store.to_checkpoint(),
        }
    }

    pub fn from_checkpoint(ckpt: &ModelCheckpoint) -> Result<Model, GnnError> {
        let mut model = Model::new(ckpt.config)?;
        model.store.load_checkpoint(&ckpt.params)?;
        Ok(model)
    }

    fn pass(&self, t: &mut Tape, layer: &Layer, batches: &[Batch], ptr: &mut StatePtrs) -> Result<(), GnnError> {
        for b in batches {
            let hu = t.gather(b.neighbors.iter().map(|&u| ptr[u]).collect())?;
            let hv = t.gather(b.nodes.iter().map(|&v| ptr[v]).collect())?;
            let h = layer.update(t, b, hu, hv)?;
            for (i, &v) in b.nodes.iter().enumerate() {
                ptr[v] = (h, i);
            }
        }
        Ok(())
    }

    fn materialize(t: &Tape, ptr: &StatePtrs) -> Array2<f64> {
        let cols = t.dim(ptr[0].0).1;
        let mut out = Array2::zeros((ptr.len(), cols));
        for (v, &(var, row)) in ptr.iter().enumerate() {
            out.row_mut(v).assign(&t.value(var).row(row));
        }
        out
    }

    fn propagate(
        &self,
        t: &mut Tape,
        prep: &PreparedCircuit,
        w: &Workload,
        seed: u64,
        mut trace: Option<&mut Vec<IterationStates>>,
    ) -> Result<StatePtrs, GnnError> {
        let init = init_states(&prep.graph, w, self.config.hidden_dim, seed)?;
        let h0 = t.constant(init.h);
        let mut ptr: StatePtrs = (0..prep.len()).map(|v| (h0, v)).collect();
        for _ in 0..self.config.effective_iterations() {
            self.pass(t, &self.forward, &prep.forward, &mut ptr)?;
            let after_forward = trace.as_ref().map(|_| Self::materialize(t, &ptr));
            self.pass(t, &self.reverse, &prep.reverse, &mut ptr)?;
            let after_reverse = trace.as_ref().map(|_| Self::materialize(t, &ptr));
            if self.config.variant == Variant::SeqGnn {
                let before = ptr.clone();
                for &(d, u) in &prep.dff_copy {
                    ptr[d] = before[u];
                }
            }
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(IterationStates {
                    after_forward: after_forward.unwrap(),
                    after_reverse: after_reverse.unwrap(),
                    after_copy: Self::materialize(t, &ptr),
                });
            }
        }
        Ok(ptr)
    }

    fn outputs(&self, t: &mut Tape, ptr: StatePtrs, objective: Option<Objective>) -> Result<Outputs, GnnError> {
        let states = t.gather(ptr)?;
        let want_probs = objective != Some(Objective::Errors);
        let want_err = objective != Some(Objective::Probabilities);
        let tr = want_probs.then(|| self.head_tr.apply(t, states)).transpose()?;
        let lg = want_probs.then(|| self.head_lg.apply(t, states)).transpose()?;
        let err = match (&self.head_err, want_err) {
            (Some(head), true) => Some(head.apply(t, states)?),
            _ => None,
        };
        Ok(Outputs { tr, lg, err })
    }

    /// Runs propagation and the regressor heads. `seed` drives the random
    /// initial states of non-input nodes.
    pub fn predict(&self, prep: &PreparedCircuit, w: &Workload, seed: u64) -> Result<Predictions, GnnError> {
        let mut t = Tape::new(&self.store);
        let ptr = self.propagate(&mut t, prep, w, seed, None)?;
        let out = self.outputs(&mut t, ptr, None)?;
        Ok(Predictions {
            tr: t.value(out.tr.unwrap()).to_owned(),
            lg: t.value(out.lg.unwrap()).to_owned(),
            err: out.err.map(|e| t.value(e).to_owned()),
        })
    }

    /// Final hidden states (N × hidden_dim).
    pub fn embed(&self, prep: &PreparedCircuit, w: &Workload, seed: u64) -> Result<Array2<f64>, GnnError> {
        let mut t = Tape::new(&self.store);
        let ptr = self.propagate(&mut t, prep, w, seed, None)?;
        Ok(Self::materialize(&t, &ptr))
    }

    /// States after each step of every iteration.
    pub fn trace(&self, prep: &PreparedCircuit, w: &Workload, seed: u64) -> Result<Vec<IterationStates>, GnnError> {
        let mut t = Tape::new(&self.store);
        let mut out = Vec::new();
        self.propagate(&mut t, prep, w, seed, Some(&mut out))?;
        Ok(out)
    }

    /// Loss of one circuit and its gradient with respect to every parameter.
    pub fn loss_and_grad(
        &self,
        prep: &PreparedCircuit,
        w: &Workload,
        labels: &LabelSet,
        objective: Objective,
        seed: u64,
    ) -> Result<(LossParts, Gradients), GnnError> {
        let n = prep.len();
        if labels.len() != n {
            return Err(GnnError::LabelMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if objective == Objective::Errors {
            if self.head_err.is_none() {
                return Err(GnnError::MissingErrorHead);
            }
            if !labels.has_errors() {
                return Err(GnnError::MissingErrorLabels);
            }
        }
        let mut t = Tape::new(&self.store);
        let ptr = self.propagate(&mut t, prep, w, seed, None)?;
        let out = self.outputs(&mut t, ptr, Some(objective))?;
        let two_col = |a: &[f64], b: &[f64]| Array2::from_shape_fn((n, 2), |(i, k)| if k == 0 { a[i] } else { b[i] });
        let (parts, root) = match objective {
            Objective::Probabilities => {
                let l_tr = t.l1(out.tr.unwrap(), two_col(&labels.tr01, &labels.tr10))?;
                let lg_target = Array2::from_shape_vec((n, 1), labels.logic_prob.clone()).expect("length checked");
                let l_lg = t.l1(out.lg.unwrap(), lg_target)?;
                let total = t.add(l_tr, l_lg)?;
                let parts = LossParts {
                    tr: t.scalar(l_tr),
                    lg: t.scalar(l_lg),
                    err: 0.0,
                    total: t.scalar(total),
                };
                (parts, total)
            }
            Objective::Errors => {
                let (e01, e10) = (labels.err01.as_ref().unwrap(), labels.err10.as_ref().unwrap());
                let l_err = t.l1(out.err.unwrap(), two_col(e01, e10))?;
                let v = t.scalar(l_err);
                let parts = LossParts {
                    tr: 0.0,
                    lg: 0.0,
                    err: v,
                    total: v,
                };
                (parts, l_err)
            }
        };
        if !parts.total.is_finite() {
            return Err(GnnError::NonFiniteLoss(prep.graph.name().to_string()));
        }
        Ok((parts, t.backward(root)))
    }
}
