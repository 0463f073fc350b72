// SPDX-License-Identifier: Apache-2.0
//! Aggregation, combine and regressor blocks.

use super::prepare::Batch;
use crate::tensor::{GruParams, ParamId, ParamStore, Tape, TensorError, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregator {
    /// Softmax attention over neighbors (logic message) followed by a
    /// sigmoid gate against the node's previous state (transition message).
    DualAttention,
    /// The softmax attention stage alone.
    Attention,
    /// Degree-normalized linear sum.
    ConvSum,
}

impl Aggregator {
    pub fn message_dim(self, hidden: usize) -> usize {
        match self {
            Aggregator::DualAttention => 2 * hidden,
            _ => hidden,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregator::DualAttention => "dual-attention",
            Aggregator::Attention => "attention",
            Aggregator::ConvSum => "conv-sum",
        }
    }
}

impl std::str::FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dual-attention" => Ok(Aggregator::DualAttention),
            "attention" => Ok(Aggregator::Attention),
            "conv-sum" => Ok(Aggregator::ConvSum),
            _ => Err(format!(
                "unknown aggregator `{s}` (dual-attention, attention, conv-sum)"
            )),
        }
    }
}

/// One propagation layer (forward or reverse).
#[derive(Debug, Clone)]
pub(crate) struct Layer {
    /// Score vectors (w1 on the node, w2 on the neighbor), each H×1.
    attn: Option<(ParamId, ParamId)>,
    /// Gate vectors (w1' on the node, w2' on the logic message), each H×1.
    gate: Option<(ParamId, ParamId)>,
    conv: Option<ParamId>,
    pub gru: GruParams,
}

impl Layer {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        aggregator: Aggregator,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let mut vec = |name: &str, rng: &mut R| store.add_uniform(format!("{prefix}.{name}"), hidden, 1, hidden, rng);
        let (attn, gate) = match aggregator {
            Aggregator::ConvSum => (None, None),
            Aggregator::Attention => ((Some((vec("attn.w1", rng), vec("attn.w2", rng)))), None),
            Aggregator::DualAttention => (
                Some((vec("attn.w1", rng), vec("attn.w2", rng))),
                Some((vec("gate.w1", rng), vec("gate.w2", rng))),
            ),
        };
        let conv = (aggregator == Aggregator::ConvSum)
            .then(|| store.add_uniform(format!("{prefix}.conv.w"), hidden, hidden, hidden, rng));
        let gru = GruParams::new(
            store,
            &format!("{prefix}.gru"),
            aggregator.message_dim(hidden) + 4,
            hidden,
            rng,
        );
        Layer { attn, gate, conv, gru }
    }

    /// Message for every node of `batch` from neighbor states `hu` (one row
    /// per edge) and the nodes' own previous states `hv`.
    pub fn aggregate(&self, t: &mut Tape, batch: &Batch, hu: Var, hv: Var) -> Result<Var, TensorError> {
        if let Some(w) = self.conv {
            let mean = t.segment_mean(hu, batch.segments.clone())?;
            let w = t.param(w);
            return t.matmul(mean, w);
        }
        let (w1, w2) = self.attn.expect("attention parameters");
        let (w1, w2) = (t.param(w1), t.param(w2));
        let s_u = t.matmul(hu, w2)?;
        let s_v = t.matmul(hv, w1)?;
        let s_v = t.gather(batch.owners.iter().map(|&b| (s_v, b)).collect())?;
        let score = t.add(s_u, s_v)?;
        let alpha = t.segment_softmax(score, batch.segments.clone())?;
        let weighted = t.scale_rows(alpha, hu)?;
        let m_lg = t.segment_sum(weighted, batch.segments.clone())?;
        let Some((g1, g2)) = self.gate else {
            return Ok(m_lg);
        };
        let (g1, g2) = (t.param(g1), t.param(g2));
        let a = t.matmul(hv, g1)?;
        let b = t.matmul(m_lg, g2)?;
        let z = t.add(a, b)?;
        let gate = t.sigmoid(z);
        let m_tr = t.scale_rows(gate, m_lg)?;
        t.concat_cols(&[m_tr, m_lg])
    }

    /// Aggregate then combine: GRU([message, feature], h_prev).
    pub fn update(&self, t: &mut Tape, batch: &Batch, hu: Var, hv: Var) -> Result<Var, TensorError> {
        let msg = self.aggregate(t, batch, hu, hv)?;
        let feat = t.constant(batch.features.clone());
        let x = t.concat_cols(&[msg, feat])?;
        t.gru(x, hv, &self.gru)
    }
}

/// Linear layers with ReLU between them and a sigmoid on the output.
#[derive(Debug, Clone)]
pub(crate) struct Mlp {
    layers: Vec<(ParamId, ParamId)>,
}

impl Mlp {
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, dims: &[usize], rng: &mut R) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, d)| {
                let w = store.add_uniform(format!("{prefix}.l{k}.w"), d[0], d[1], d[0], rng);
                let b = store.add_uniform(format!("{prefix}.l{k}.b"), 1, d[1], d[0], rng);
                (w, b)
            })
            .collect();
        Mlp { layers }
    }

    pub fn apply(&self, t: &mut Tape, x: Var) -> Result<Var, TensorError> {
        let mut h = x;
        for (k, &(w, b)) in self.layers.iter().enumerate() {
            let (w, b) = (t.param(w), t.param(b));
            h = t.linear(h, w, b)?;
            h = if k + 1 < self.layers.len() {
                t.relu(h)
            } else {
                t.sigmoid(h)
            };
        }
        Ok(h)
    }

    pub fn params(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.layers.iter().flat_map(|&(w, b)| [w, b])
    }
}
