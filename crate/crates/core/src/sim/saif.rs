// SPDX-License-Identifier: Apache-2.0
//! Minimal SAIF writer and reader.
//!
//! Only the subset below is produced and accepted:
//!
//! ```text
//! (SAIFILE
//!   (SAIFVERSION "2.0")
//!   (TIMESCALE 1 ns)
//!   (DURATION <d>)
//!   (INSTANCE top
//!     (NET
//!       (<name> (T0 <t0>) (T1 <t1>) (TC <tc>))
//!       ...)))
//! ```

use super::{LabelSet, SimError};
use crate::netlist::CircuitGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct SaifNet {
    pub name: String,
    pub t0: f64,
    pub t1: f64,
    pub tc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaifDoc {
    /// In TIMESCALE units (ns).
    pub duration: f64,
    pub instance: String,
    pub nets: Vec<SaifNet>,
}

/// One net per node: T1 = logic_prob·duration, T0 = duration − T1,
/// TC = (tr01 + tr10)·(n_cycles − 1), duration = n_cycles·clock_period_ns.
pub fn export_saif(
    g: &CircuitGraph,
    labels: &LabelSet,
    n_cycles: usize,
    clock_period_ns: f64,
) -> Result<String, SimError> {
    if labels.len() != g.len() {
        return Err(SimError::LabelCountMismatch {
            expected: g.len(),
            found: labels.len(),
        });
    }
    let duration = n_cycles as f64 * clock_period_ns;
    let edges = n_cycles.saturating_sub(1) as f64;
    let mut out = String::new();
    out.push_str("(SAIFILE\n");
    out.push_str("  (SAIFVERSION \"2.0\")\n");
    out.push_str("  (TIMESCALE 1 ns)\n");
    out.push_str(&format!("  (DURATION {duration})\n"));
    out.push_str("  (INSTANCE top\n    (NET\n");
    for (v, node) in g.nodes().iter().enumerate() {
        let t1 = labels.logic_prob[v] * duration;
        let t0 = duration - t1;
        let tc = (labels.tr01[v] + labels.tr10[v]) * edges;
        out.push_str(&format!("      ({} (T0 {t0}) (T1 {t1}) (TC {tc}))\n", node.name));
    }
    out.push_str("    )\n  )\n)\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<(String, usize)> {
    let mut toks = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut cur = String::new();
        let mut in_str = false;
        for c in line.chars() {
            match c {
                '"' => {
                    cur.push(c);
                    in_str = !in_str;
                }
                '(' | ')' if !in_str => {
                    if !cur.is_empty() {
                        toks.push((std::mem::take(&mut cur), i + 1));
                    }
                    toks.push((c.to_string(), i + 1));
                }
                c if c.is_whitespace() && !in_str => {
                    if !cur.is_empty() {
                        toks.push((std::mem::take(&mut cur), i + 1));
                    }
                }
                c => cur.push(c),
            }
        }
        if !cur.is_empty() {
            toks.push((cur, i + 1));
        }
    }
    toks
}

fn parse_sexp(toks: &[(String, usize)], pos: &mut usize) -> Result<Sexp, SimError> {
    let (tok, line) = toks.get(*pos).ok_or(SimError::Format {
        line: toks.last().map_or(1, |t| t.1),
        msg: "unexpected end of SAIF".into(),
    })?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match toks.get(*pos) {
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_sexp(toks, pos)?),
                    None => {
                        return Err(SimError::Format {
                            line: *line,
                            msg: "unbalanced parenthesis".into(),
                        })
                    }
                }
            }
        }
        ")" => Err(SimError::Format {
            line: *line,
            msg: "unexpected `)`".into(),
        }),
        atom => Ok(Sexp::Atom(atom.to_string())),
    }
}

fn fmt_err(msg: impl Into<String>) -> SimError {
    SimError::Format {
        line: 0,
        msg: msg.into(),
    }
}

fn head(list: &[Sexp]) -> Option<&str> {
    match list.first() {
        Some(Sexp::Atom(a)) => Some(a.as_str()),
        _ => None,
    }
}

fn number(s: &Sexp) -> Result<f64, SimError> {
    match s {
        Sexp::Atom(a) => a.parse().map_err(|_| fmt_err(format!("bad number `{a}`"))),
        _ => Err(fmt_err("expected number")),
    }
}

pub fn parse_saif(text: &str) -> Result<SaifDoc, SimError> {
    let toks = tokenize(text);
    let mut pos = 0;
    let root = parse_sexp(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(fmt_err("trailing content after SAIFILE"));
    }
    let Sexp::List(items) = root else {
        return Err(fmt_err("expected (SAIFILE ...)"));
    };
    if head(&items) != Some("SAIFILE") {
        return Err(fmt_err("expected (SAIFILE ...)"));
    }
    let mut duration = None;
    let mut instance = None;
    for item in &items[1..] {
        let Sexp::List(l) = item else {
            return Err(fmt_err("unexpected atom in SAIFILE"));
        };
        match head(l) {
            Some("SAIFVERSION") | Some("TIMESCALE") => {}
            Some("DURATION") => duration = Some(number(l.get(1).ok_or_else(|| fmt_err("empty DURATION"))?)?),
            Some("INSTANCE") => {
                let name = match l.get(1) {
                    Some(Sexp::Atom(a)) => a.clone(),
                    _ => return Err(fmt_err("INSTANCE needs a name")),
                };
                let mut nets = Vec::new();
                for block in &l[2..] {
                    let Sexp::List(b) = block else {
                        return Err(fmt_err("unexpected atom in INSTANCE"));
                    };
                    if head(b) != Some("NET") {
                        return Err(fmt_err("only NET blocks are supported"));
                    }
                    for net in &b[1..] {
                        nets.push(parse_net(net)?);
                    }
                }
                instance = Some((name, nets));
            }
            other => return Err(fmt_err(format!("unsupported SAIF entry {other:?}"))),
        }
    }
    let (instance, nets) = instance.ok_or_else(|| fmt_err("missing INSTANCE"))?;
    Ok(SaifDoc {
        duration: duration.ok_or_else(|| fmt_err("missing DURATION"))?,
        instance,
        nets,
    })
}

fn parse_net(net: &Sexp) -> Result<SaifNet, SimError> {
    let Sexp::List(l) = net else {
        return Err(fmt_err("expected net entry"));
    };
    let name = match l.first() {
        Some(Sexp::Atom(a)) => a.clone(),
        _ => return Err(fmt_err("net entry needs a name")),
    };
    let (mut t0, mut t1, mut tc) = (None, None, None);
    for field in &l[1..] {
        let Sexp::List(f) = field else {
            return Err(fmt_err(format!("net {name}: expected (KEY value)")));
        };
        let val = number(f.get(1).ok_or_else(|| fmt_err("missing value"))?)?;
        match head(f) {
            Some("T0") => t0 = Some(val),
            Some("T1") => t1 = Some(val),
            Some("TC") => tc = Some(val),
            _ => {}
        }
    }
    let missing = |k: &str| fmt_err(format!("net {name}: missing {k}"));
    Ok(SaifNet {
        t0: t0.ok_or_else(|| missing("T0"))?,
        t1: t1.ok_or_else(|| missing("T1"))?,
        tc: tc.ok_or_else(|| missing("TC"))?,
        name,
    })
}
