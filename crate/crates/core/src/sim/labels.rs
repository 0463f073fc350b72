// SPDX-License-Identifier: Apache-2.0

use super::{SimError, Traces};

/// Per-node supervision: logic-1 probability, 0→1 / 1→0 transition
/// probabilities per clock edge and, optionally, fault error probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub logic_prob: Vec<f64>,
    pub tr01: Vec<f64>,
    pub tr10: Vec<f64>,
    pub err01: Option<Vec<f64>>,
    pub err10: Option<Vec<f64>>,
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.logic_prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logic_prob.is_empty()
    }

    /// Toggle rate per clock edge (tr01 + tr10).
    pub fn toggle_rate(&self) -> Vec<f64> {
        self.tr01.iter().zip(&self.tr10).map(|(a, b)| a + b).collect()
    }

    pub fn has_errors(&self) -> bool {
        self.err01.is_some() && self.err10.is_some()
    }
}

/// Counts logic-1 cycles and consecutive-cycle transitions.
///
/// logic_prob = ones / n; tr01 = #(0→1) / (n−1); tr10 likewise.
pub fn extract_labels(traces: &Traces) -> Result<LabelSet, SimError> {
    let n = traces.n_cycles;
    if n < 2 {
        return Err(SimError::TooFewCycles(n));
    }
    let edges = (n - 1) as f64;
    let mut logic_prob = Vec::with_capacity(traces.nodes.len());
    let mut tr01 = Vec::with_capacity(traces.nodes.len());
    let mut tr10 = Vec::with_capacity(traces.nodes.len());
    for t in &traces.nodes {
        let (up, down) = t.transitions();
        logic_prob.push(t.count_ones() as f64 / n as f64);
        tr01.push(up as f64 / edges);
        tr10.push(down as f64 / edges);
    }
    Ok(LabelSet {
        logic_prob,
        tr01,
        tr10,
        err01: None,
        err10: None,
    })
}

/// `node_id,logic_prob,tr01,tr10[,err01,err10]` with header.
pub fn write_labels_csv(labels: &LabelSet) -> String {
    let errs = labels.err01.as_ref().zip(labels.err10.as_ref());
    let mut out = String::from("node_id,logic_prob,tr01,tr10");
    if errs.is_some() {
        out.push_str(",err01,err10");
    }
    out.push('\n');
    for v in 0..labels.len() {
        out.push_str(&format!(
            "{},{},{},{}",
            v, labels.logic_prob[v], labels.tr01[v], labels.tr10[v]
        ));
        if let Some((e01, e10)) = errs {
            out.push_str(&format!(",{},{}", e01[v], e10[v]));
        }
        out.push('\n');
    }
    out
}

pub fn read_labels_csv(text: &str) -> Result<LabelSet, SimError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| h.trim().to_string())
        .ok_or(SimError::Format {
            line: 1,
            msg: "empty label file".into(),
        })?;
    let with_err = match header.as_str() {
        "node_id,logic_prob,tr01,tr10" => false,
        "node_id,logic_prob,tr01,tr10,err01,err10" => true,
        other => {
            return Err(SimError::Format {
                line: 1,
                msg: format!("unexpected header `{other}`"),
            })
        }
    };
    let width = if with_err { 6 } else { 4 };
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width - 1];
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| SimError::Format { line: i + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(err(format!("expected {width} fields, found {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|e| err(format!("bad node id: {e}")))?;
        if id != cols[0].len() {
            return Err(err(format!("node ids must be dense and ascending, found {id}")));
        }
        for (c, f) in cols.iter_mut().zip(&fields[1..]) {
            let x: f64 = f.parse().map_err(|e| err(format!("bad value `{f}`: {e}")))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(err(format!("value {x} outside [0,1]")));
            }
            c.push(x);
        }
    }
    let mut it = cols.into_iter();
    let logic_prob = it.next().unwrap();
    let tr01 = it.next().unwrap();
    let tr10 = it.next().unwrap();
    let err01 = it.next();
    let err10 = it.next();
    Ok(LabelSet {
        logic_prob,
        tr01,
        tr10,
        err01,
        err10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;
    use crate::sim::{simulate, BitTrace, Workload};

    fn labels_of(bits: &[bool]) -> LabelSet {
        let traces = Traces {
            n_cycles: bits.len(),
            nodes: vec![BitTrace::from_bits(bits.iter().copied())],
        };
        extract_labels(&traces).unwrap()
    }

    #[test]
    fn constant_one() {
        let l = labels_of(&[true; 20]);
        assert_eq!((l.logic_prob[0], l.tr01[0], l.tr10[0]), (1.0, 0.0, 0.0));
    }

    #[test]
    fn alternating_four_cycles() {
        let l = labels_of(&[false, true, false, true]);
        assert_eq!(l.logic_prob[0], 0.5);
        assert_eq!(l.tr01[0], 2.0 / 3.0);
        assert_eq!(l.tr10[0], 1.0 / 3.0);
    }

    #[test]
    fn and_of_fair_inputs() {
        // independent p=0.5 inputs: P(c=1) = 1/4, P(0→1) = 3/4 · 1/4 = 3/16
        let g = parse_netlist("INPUT(a)\nINPUT(b)\nc = AND(a, b)").unwrap();
        let w = Workload::from_probs(vec![0.5, 0.5], 10_000, 21);
        let l = extract_labels(&simulate(&g, &w).unwrap()).unwrap();
        assert!((l.logic_prob[2] - 0.25).abs() < 0.02);
        assert!((l.tr01[2] - 0.1875).abs() < 0.02);
    }

    #[test]
    fn single_cycle_rejected() {
        let traces = Traces {
            n_cycles: 1,
            nodes: vec![BitTrace::from_bits([true])],
        };
        assert_eq!(extract_labels(&traces), Err(SimError::TooFewCycles(1)));
    }

    #[test]
    fn csv_roundtrip_with_and_without_errors() {
        let mut l = labels_of(&[false, true, true, false, true]);
        assert_eq!(read_labels_csv(&write_labels_csv(&l)).unwrap(), l);
        l.err01 = Some(vec![0.125]);
        l.err10 = Some(vec![1.0 / 3.0]);
        assert_eq!(read_labels_csv(&write_labels_csv(&l)).unwrap(), l);
        assert!(read_labels_csv("node_id,logic_prob,tr01,tr10\n0,1.5,0,0\n").is_err());
        assert!(read_labels_csv("node_id,logic_prob,tr01,tr10\n1,0.5,0,0\n").is_err());
    }
}
