// SPDX-License-Identifier: Apache-2.0
//! Per-cycle input traces.
//!
//! ```text
//! PIS a,b,c
//! 010
//! 1,1,0
//! ```
//!
//! Separators between bits are optional; `#` starts a comment.

use super::DownstreamError;
use crate::netlist::CircuitGraph;
use crate::sim::{BitTrace, Workload};

fn err(line: usize, msg: impl Into<String>) -> DownstreamError {
    DownstreamError::Testbench { line, msg: msg.into() }
}

/// Reads a trace whose header names every primary input of `g` exactly
/// once, in any order.
pub fn parse_testbench(g: &CircuitGraph, text: &str) -> Result<Workload, DownstreamError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty testbench"))?;
    let names = header
        .strip_prefix("PIS")
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .ok_or_else(|| err(hline, "expected `PIS name1,name2,...`"))?;
    let names: Vec<&str> = names.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();

    let pi_names = g.pi_names();
    if names.len() != pi_names.len() {
        return Err(err(
            hline,
            format!("header lists {} inputs, circuit has {}", names.len(), pi_names.len()),
        ));
    }
    // column c feeds circuit PI slot[c]
    let mut slot = Vec::with_capacity(names.len());
    let mut taken = vec![false; names.len()];
    for name in &names {
        let k = pi_names
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| err(hline, format!("`{name}` is not a primary input")))?;
        if std::mem::replace(&mut taken[k], true) {
            return Err(err(hline, format!("`{name}` listed twice")));
        }
        slot.push(k);
    }

    let mut traces = vec![BitTrace::with_capacity(0); names.len()];
    for (line, row) in lines {
        let bits: Vec<char> = row.chars().filter(|c| !c.is_whitespace() && *c != ',').collect();
        if bits.len() != names.len() {
            return Err(err(
                line,
                format!("expected {} bits, found {}", names.len(), bits.len()),
            ));
        }
        for (c, b) in bits.into_iter().enumerate() {
            let bit = match b {
                '0' => false,
                '1' => true,
                other => return Err(err(line, format!("invalid bit `{other}`"))),
            };
            traces[slot[c]].push(bit);
        }
    }
    if traces.first().is_some_and(|t| t.is_empty()) {
        return Err(err(hline, "no cycles"));
    }
    Ok(Workload::from_pattern(traces))
}

/// Materializes the pattern of `w` in circuit PI order.
pub fn write_testbench(g: &CircuitGraph, w: &Workload) -> String {
    let mut out = format!("PIS {}\n", g.pi_names().join(","));
    let pattern = w.pattern();
    for t in 0..w.n_cycles() {
        out.extend(pattern.iter().map(|tr| if tr.get(t) { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn two_pi() -> CircuitGraph {
        parse_netlist("INPUT(a)\nINPUT(b)\nc = AND(a, b)").unwrap()
    }

    #[test]
    fn probabilities_from_trace() {
        let g = two_pi();
        let w = parse_testbench(&g, "PIS a,b\n11\n1,0\n1 1\n1,0\n").unwrap();
        assert_eq!(w.pi_probs(), &[1.0, 0.5]);
        assert_eq!(w.n_cycles(), 4);
    }

    #[test]
    fn columns_follow_names() {
        let g = two_pi();
        let w = parse_testbench(&g, "PIS b,a\n10\n10\n").unwrap();
        assert_eq!(w.pi_probs(), &[0.0, 1.0]);
    }

    #[test]
    fn roundtrip() {
        let g = two_pi();
        let w = parse_testbench(&g, "PIS a,b\n01\n10\n11\n00\n").unwrap();
        assert_eq!(parse_testbench(&g, &write_testbench(&g, &w)).unwrap(), w);
        let random = Workload::from_probs(vec![0.3, 0.8], 64, 4);
        let back = parse_testbench(&g, &write_testbench(&g, &random)).unwrap();
        assert_eq!(back.pattern(), random.pattern());
    }

    #[test]
    fn malformed() {
        let g = two_pi();
        for bad in [
            "",
            "PIS a\n1\n",
            "PIS a,c\n11\n",
            "PIS a,a\n11\n",
            "PIS a,b\n1\n",
            "PIS a,b\n12\n",
            "PIS a,b\n",
            "a,b\n11",
        ] {
            assert!(parse_testbench(&g, bad).is_err(), "{bad:?}");
        }
        assert_eq!(
            parse_testbench(&g, "PIS a,b\n11\n111\n").unwrap_err(),
            DownstreamError::Testbench {
                line: 3,
                msg: "expected 2 bits, found 3".into()
            }
        );
    }
}
