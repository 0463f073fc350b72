// SPDX-License-Identifier: Apache-2.0
//! Finite-difference checks of single model components.
//!
//! Component inputs are registered as parameters, so input gradients are
//! checked along with weight gradients.

use super::layers::{Layer, Mlp};
use super::{Aggregator, PreparedCircuit};
use crate::netlist::generate_random_circuit;
use crate::tensor::{grad_check, GradCheckConfig, GradCheckReport, ParamId, ParamStore, Tape, TensorError, Var};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ComponentCheck {
    pub component: String,
    pub report: GradCheckReport,
}

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

fn check(
    name: String,
    store: &ParamStore,
    target: &Array2<f64>,
    cfg: &GradCheckConfig,
    f: impl Fn(&mut Tape) -> Result<Var, TensorError>,
) -> Result<ComponentCheck, TensorError> {
    let report = grad_check(
        store,
        |s| {
            let mut t = Tape::new(s);
            let out = f(&mut t)?;
            let loss = t.l1(out, target.clone())?;
            Ok((t.scalar(loss), t.backward(loss)))
        },
        cfg,
    )?;
    Ok(ComponentCheck {
        component: name,
        report,
    })
}

/// Checks the three aggregators (alone and with the GRU update) and the
/// regression head at width `hidden`.
pub fn component_grad_checks(
    hidden: usize,
    seed: u64,
    cfg: &GradCheckConfig,
) -> Result<Vec<ComponentCheck>, TensorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = generate_random_circuit(3, 14, 2, seed);
    let prep = PreparedCircuit::new(&g);
    // the batch with the most edges has the most varied segment sizes
    let batch = prep
        .forward
        .iter()
        .chain(&prep.reverse)
        .max_by_key(|b| (b.neighbors.len(), b.nodes.len()))
        .expect("circuit has gates");
    let (edges, rows) = (batch.neighbors.len(), batch.nodes.len());

    let mut out = Vec::new();
    for agg in [Aggregator::Attention, Aggregator::DualAttention, Aggregator::ConvSum] {
        let mut store = ParamStore::new();
        let layer = Layer::new(&mut store, "layer", agg, hidden, &mut rng);
        let hu: ParamId = store.add("input.hu", random(&mut rng, edges, hidden));
        let hv: ParamId = store.add("input.hv", random(&mut rng, rows, hidden));
        let msg_target = random(&mut rng, rows, agg.message_dim(hidden)).mapv(f64::abs);
        out.push(check(
            format!("aggregate/{}", agg.as_str()),
            &store,
            &msg_target,
            cfg,
            |t| {
                let (u, v) = (t.param(hu), t.param(hv));
                layer.aggregate(t, batch, u, v)
            },
        )?);
        let h_target = random(&mut rng, rows, hidden);
        out.push(check(
            format!("update/{}", agg.as_str()),
            &store,
            &h_target,
            cfg,
            |t| {
                let (u, v) = (t.param(hu), t.param(hv));
                layer.update(t, batch, u, v)
            },
        )?);
    }

    let mut store = ParamStore::new();
    let head = Mlp::new(&mut store, "head", &[hidden, hidden, hidden, 2], &mut rng);
    let x = store.add("input.x", random(&mut rng, rows, hidden));
    let target = random(&mut rng, rows, 2).mapv(|v| 0.5 + 0.4 * v);
    out.push(check("head/mlp".into(), &store, &target, cfg, |t| {
        let x = t.param(x);
        head.apply(t, x)
    })?);
    Ok(out)
}
