// SPDX-License-Identifier: Apache-2.0
//! Bench-style netlist reader.
//!
//! ```text
//! # circuit toggle
//! INPUT(a)
//! q = DFF(n)
//! n = NOT(q)
//! OUTPUT(n)
//! ```
//!
//! Statements may reference signals defined further down. The strict reader
//! ([`parse_netlist`]) accepts only AND/NOT/DFF gates; the extended reader
//! ([`parse_gate_netlist`]) also takes OR, NAND, NOR, XOR, XNOR and BUF.

use super::{CircuitGraph, NetlistError, Node, NodeId, NodeKind};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Input,
    And,
    Not,
    Dff,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Buf,
}

impl GateKind {
    fn from_keyword(s: &str) -> Option<GateKind> {
        Some(match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NOT" => GateKind::Not,
            "DFF" => GateKind::Dff,
            "OR" => GateKind::Or,
            "NAND" => GateKind::Nand,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "BUF" | "BUFF" => GateKind::Buf,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::Input => "INPUT",
            GateKind::And => "AND",
            GateKind::Not => "NOT",
            GateKind::Dff => "DFF",
            GateKind::Or => "OR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Buf => "BUF",
        }
    }

    /// (min, max) fanin count.
    fn arity(self) -> (usize, usize) {
        match self {
            GateKind::Input => (0, 0),
            GateKind::Not | GateKind::Dff | GateKind::Buf => (1, 1),
            _ => (2, usize::MAX),
        }
    }

    /// Truth function over fanin values.
    pub fn eval(self, ins: &[bool]) -> bool {
        match self {
            GateKind::Input => false,
            GateKind::And => ins.iter().all(|&b| b),
            GateKind::Nand => !ins.iter().all(|&b| b),
            GateKind::Or => ins.iter().any(|&b| b),
            GateKind::Nor => !ins.iter().any(|&b| b),
            GateKind::Xor => ins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Xnor => !ins.iter().fold(false, |a, &b| a ^ b),
            GateKind::Not => !ins[0],
            GateKind::Buf | GateKind::Dff => ins[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub name: String,
    pub kind: GateKind,
    pub fanins: Vec<NodeId>,
}

/// A netlist with arbitrary gate types, before AIG decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateNetlist {
    pub name: String,
    pub gates: Vec<Gate>,
    pub outputs: Vec<NodeId>,
}

impl GateNetlist {
    pub fn pis(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind == GateKind::Input)
            .map(|(i, _)| i)
    }
}

enum Stmt {
    Input(String),
    Output(String, usize, usize),
    Assign {
        name: String,
        gate: String,
        args: Vec<(String, usize)>,
    },
}

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> NetlistError {
        NetlistError::Syntax {
            line: self.line,
            col: self.pos + 1,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn ident(&mut self) -> Result<(String, usize), NetlistError> {
        self.skip_ws();
        let start = self.pos;
        for c in self.text[self.pos..].chars() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',' | '=') {
                break;
            }
            self.pos += c.len_utf8();
        }
        if self.pos == start {
            return Err(self.err("expected identifier"));
        }
        Ok((self.text[start..self.pos].to_string(), start + 1))
    }

    fn expect(&mut self, ch: char) -> Result<(), NetlistError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{ch}`")))
        }
    }

    fn peek(&mut self, ch: char) -> bool {
        self.skip_ws();
        self.text[self.pos..].starts_with(ch)
    }
}

fn parse_line(line: usize, text: &str) -> Result<Option<Stmt>, NetlistError> {
    let mut cur = Cursor { line, text, pos: 0 };
    if cur.at_end() {
        return Ok(None);
    }
    let (head, head_col) = cur.ident()?;
    let stmt = if cur.peek('=') {
        cur.expect('=')?;
        let (gate, _) = cur.ident()?;
        cur.expect('(')?;
        let mut args = Vec::new();
        if !cur.peek(')') {
            loop {
                let (a, col) = cur.ident()?;
                args.push((a, col));
                if cur.peek(',') {
                    cur.expect(',')?;
                } else {
                    break;
                }
            }
        }
        cur.expect(')')?;
        Stmt::Assign { name: head, gate, args }
    } else {
        let kw = head.to_ascii_uppercase();
        if kw != "INPUT" && kw != "OUTPUT" {
            return Err(NetlistError::Syntax {
                line,
                col: head_col,
                msg: format!("expected INPUT, OUTPUT or assignment, found `{head}`"),
            });
        }
        cur.expect('(')?;
        let (name, col) = cur.ident()?;
        cur.expect(')')?;
        if kw == "INPUT" {
            Stmt::Input(name)
        } else {
            Stmt::Output(name, line, col)
        }
    };
    if !cur.at_end() {
        return Err(cur.err("trailing characters"));
    }
    Ok(Some(stmt))
}

/// Parses the extended grammar into a [`GateNetlist`].
pub fn parse_gate_netlist(text: &str) -> Result<GateNetlist, NetlistError> {
    parse_with_lines(text).map(|(gn, _)| gn)
}

/// Also returns the defining line of every gate.
fn parse_with_lines(text: &str) -> Result<(GateNetlist, Vec<usize>), NetlistError> {
    let mut name = String::from("top");
    let mut defs: Vec<(String, Option<(String, Vec<(String, usize)>)>, usize)> = Vec::new();
    let mut outputs_raw = Vec::new();
    let mut ids: HashMap<String, NodeId> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let (code, comment) = match raw.find('#') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if line == 1 {
            if let Some(rest) = comment.and_then(|c| c.trim().strip_prefix("circuit ")) {
                name = rest.trim().to_string();
            }
        }
        match parse_line(line, code)? {
            None => {}
            Some(Stmt::Input(n)) => {
                if ids.insert(n.clone(), defs.len()).is_some() {
                    return Err(NetlistError::DuplicateSignal { name: n, line });
                }
                defs.push((n, None, line));
            }
            Some(Stmt::Output(n, l, c)) => outputs_raw.push((n, l, c)),
            Some(Stmt::Assign { name: n, gate, args }) => {
                if ids.insert(n.clone(), defs.len()).is_some() {
                    return Err(NetlistError::DuplicateSignal { name: n, line });
                }
                defs.push((n, Some((gate, args)), line));
            }
        }
    }

    let mut gates = Vec::with_capacity(defs.len());
    let mut lines = Vec::with_capacity(defs.len());
    for (n, def, line) in defs {
        lines.push(line);
        let gate = match def {
            None => Gate {
                name: n,
                kind: GateKind::Input,
                fanins: Vec::new(),
            },
            Some((kw, args)) => {
                let kind = GateKind::from_keyword(&kw)
                    .ok_or_else(|| NetlistError::UnsupportedGate { gate: kw.clone(), line })?;
                let (lo, hi) = kind.arity();
                if args.len() < lo || args.len() > hi {
                    let expected = if hi == usize::MAX {
                        format!("at least {lo}")
                    } else {
                        lo.to_string()
                    };
                    return Err(NetlistError::Arity {
                        name: n,
                        kind: kind.as_str().into(),
                        expected,
                        found: args.len(),
                    });
                }
                let fanins = args
                    .into_iter()
                    .map(|(a, _)| {
                        ids.get(&a)
                            .copied()
                            .ok_or(NetlistError::UndefinedSignal { name: a, line })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Gate { name: n, kind, fanins }
            }
        };
        gates.push(gate);
    }

    let mut outputs = Vec::with_capacity(outputs_raw.len());
    for (n, line, col) in outputs_raw {
        let id = *ids
            .get(&n)
            .ok_or_else(|| NetlistError::UndefinedSignal { name: n.clone(), line })?;
        if outputs.contains(&id) {
            return Err(NetlistError::Syntax {
                line,
                col,
                msg: format!("duplicate OUTPUT `{n}`"),
            });
        }
        outputs.push(id);
    }
    Ok((GateNetlist { name, gates, outputs }, lines))
}

/// Parses a strict AIG netlist (AND/NOT/DFF only) into a levelized graph.
pub fn parse_netlist(text: &str) -> Result<CircuitGraph, NetlistError> {
    let (gn, lines) = parse_with_lines(text)?;
    let mut nodes = Vec::with_capacity(gn.gates.len());
    for (g, line) in gn.gates.into_iter().zip(lines) {
        let kind = match g.kind {
            GateKind::Input => NodeKind::Pi,
            GateKind::And => NodeKind::And,
            GateKind::Not => NodeKind::Not,
            GateKind::Dff => NodeKind::Dff,
            other => {
                return Err(NetlistError::UnsupportedGate {
                    gate: other.as_str().into(),
                    line,
                })
            }
        };
        nodes.push(Node {
            name: g.name,
            kind,
            fanins: g.fanins,
        });
    }
    CircuitGraph::new(gn.name, nodes, gn.outputs)
}
