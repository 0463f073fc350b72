// SPDX-License-Identifier: Apache-2.0
//! Switching power: P = ½·Vdd²·f·Σ C(kind)·(tr01 + tr10).

use super::DownstreamError;
use crate::netlist::{CircuitGraph, NodeId, NodeKind};
use crate::sim::SaifDoc;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const FEMTO_PER_UNIT: f64 = 1e15;

/// Supply voltage, clock and per-kind switched capacitance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PowerModelJson", into = "PowerModelJson")]
pub struct PowerModel {
    pub vdd: f64,
    pub clock_freq_hz: f64,
    /// Farads, indexed by [`NodeKind::index`].
    pub cap: [f64; 4],
}

#[allow(non_snake_case)]
#[derive(Serialize, Deserialize)]
struct PowerModelJson {
    vdd: f64,
    clock_freq_hz: f64,
    cap_fF: BTreeMap<String, f64>,
}

impl TryFrom<PowerModelJson> for PowerModel {
    type Error = DownstreamError;

    fn try_from(j: PowerModelJson) -> Result<Self, Self::Error> {
        let mut cap = [0.0; 4];
        for (name, &ff) in &j.cap_fF {
            let kind = NodeKind::ALL
                .into_iter()
                .find(|k| k.as_str() == name)
                .ok_or_else(|| DownstreamError::PowerModel(format!("unknown node kind `{name}` in cap_fF")))?;
            cap[kind.index()] = ff / FEMTO_PER_UNIT;
        }
        let pm = PowerModel {
            vdd: j.vdd,
            clock_freq_hz: j.clock_freq_hz,
            cap,
        };
        pm.validate()?;
        Ok(pm)
    }
}

impl From<PowerModel> for PowerModelJson {
    fn from(pm: PowerModel) -> Self {
        PowerModelJson {
            vdd: pm.vdd,
            clock_freq_hz: pm.clock_freq_hz,
            cap_fF: NodeKind::ALL
                .into_iter()
                .map(|k| (k.as_str().to_string(), pm.cap[k.index()] * FEMTO_PER_UNIT))
                .collect(),
        }
    }
}

impl Default for PowerModel {
    /// 1 V, 1 GHz; AND 1.5 fF, NOT 1.0 fF, DFF 3.0 fF, PI 0.
    fn default() -> Self {
        let mut cap = [0.0; 4];
        cap[NodeKind::And.index()] = 1.5 / FEMTO_PER_UNIT;
        cap[NodeKind::Not.index()] = 1.0 / FEMTO_PER_UNIT;
        cap[NodeKind::Dff.index()] = 3.0 / FEMTO_PER_UNIT;
        PowerModel {
            vdd: 1.0,
            clock_freq_hz: 1e9,
            cap,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<(), DownstreamError> {
        let bad = |m: String| Err(DownstreamError::PowerModel(m));
        if !(self.vdd.is_finite() && self.vdd > 0.0) {
            return bad(format!("vdd must be positive, got {}", self.vdd));
        }
        if !(self.clock_freq_hz.is_finite() && self.clock_freq_hz > 0.0) {
            return bad(format!("clock_freq_hz must be positive, got {}", self.clock_freq_hz));
        }
        if let Some(c) = self.cap.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return bad(format!("capacitance must be non-negative, got {c}"));
        }
        Ok(())
    }

    pub fn cap(&self, kind: NodeKind) -> f64 {
        self.cap[kind.index()]
    }

    pub fn clock_period_ns(&self) -> f64 {
        1e9 / self.clock_freq_hz
    }
}

/// Watts from per-node toggle rates (tr01 + tr10 per clock edge), summed
/// over the `recorded` nodes only.
pub fn estimate_power(
    g: &CircuitGraph,
    node_tr: &[f64],
    pm: &PowerModel,
    recorded: &[NodeId],
) -> Result<f64, DownstreamError> {
    pm.validate()?;
    let mut switched = 0.0;
    for &v in recorded {
        let tr = *node_tr.get(v).ok_or(DownstreamError::MissingProbability(v))?;
        if !tr.is_finite() {
            return Err(DownstreamError::MissingProbability(v));
        }
        switched += pm.cap(g.kind(v)) * tr;
    }
    Ok(0.5 * pm.vdd * pm.vdd * pm.clock_freq_hz * switched)
}

/// Watts from SAIF toggle counts. A SAIF of n cycles spans n−1 clock edges,
/// so the per-edge rate is TC / (duration/period − 1).
pub fn power_from_saif(
    g: &CircuitGraph,
    doc: &SaifDoc,
    pm: &PowerModel,
    recorded: &[NodeId],
) -> Result<f64, DownstreamError> {
    if doc.nets.len() != g.len() {
        return Err(DownstreamError::Length {
            what: "SAIF nets",
            expected: g.len(),
            found: doc.nets.len(),
        });
    }
    let edges = (doc.duration / pm.clock_period_ns()).round() - 1.0;
    let mut rate = vec![0.0; g.len()];
    for (v, net) in doc.nets.iter().enumerate() {
        if net.name != g.node(v).name {
            return Err(DownstreamError::SaifMismatch(net.name.clone()));
        }
        rate[v] = if edges > 0.0 { net.tc / edges } else { 0.0 };
    }
    estimate_power(g, &rate, pm, recorded)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    pub ground_truth_w: f64,
    pub predicted_w: f64,
    /// |P̂ − P| / P; zero when both are zero.
    pub rel_error: f64,
}

pub fn compare_power(
    g: &CircuitGraph,
    truth_tr: &[f64],
    pred_tr: &[f64],
    pm: &PowerModel,
    recorded: &[NodeId],
) -> Result<PowerComparison, DownstreamError> {
    let gt = estimate_power(g, truth_tr, pm, recorded)?;
    let pred = estimate_power(g, pred_tr, pm, recorded)?;
    let rel_error = if gt == 0.0 {
        if pred == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (pred - gt).abs() / gt
    };
    Ok(PowerComparison {
        ground_truth_w: gt,
        predicted_w: pred,
        rel_error,
    })
}
