// SPDX-License-Identifier: Apache-2.0

use super::SimError;
use crate::netlist::CircuitGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// Packed bit sequence, one bit per cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitTrace {
    len: usize,
    words: Vec<u64>,
}

impl BitTrace {
    pub fn with_capacity(n: usize) -> Self {
        BitTrace {
            len: 0,
            words: Vec::with_capacity(n.div_ceil(64)),
        }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut t = BitTrace::default();
        for b in bits {
            t.push(b);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, t: usize) -> bool {
        debug_assert!(t < self.len);
        self.words[t / 64] >> (t % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |t| self.get(t))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of (0→1, 1→0) changes between consecutive cycles.
    pub fn transitions(&self) -> (usize, usize) {
        let (mut up, mut down) = (0, 0);
        let mut prev = None;
        for b in self.iter() {
            match (prev, b) {
                (Some(false), true) => up += 1,
                (Some(true), false) => down += 1,
                _ => {}
            }
            prev = Some(b);
        }
        (up, down)
    }
}

/// Per-PI logic-1 probabilities plus the multi-cycle input pattern.
///
/// A seeded workload materializes its pattern on first use: PI `i` draws
/// i.i.d. Bernoulli(`pi_probs[i]`) bits from ChaCha8 stream `i + 1` of
/// `seed`. A literal workload (parsed from a testbench) carries its pattern.
#[derive(Debug, Clone)]
pub struct Workload {
    pi_probs: Vec<f64>,
    n_cycles: usize,
    seed: u64,
    literal: bool,
    pattern: OnceLock<Vec<BitTrace>>,
}

impl PartialEq for Workload {
    fn eq(&self, other: &Self) -> bool {
        self.pi_probs == other.pi_probs && self.n_cycles == other.n_cycles && self.pattern() == other.pattern()
    }
}

impl Workload {
    pub fn from_probs(pi_probs: Vec<f64>, n_cycles: usize, seed: u64) -> Self {
        Workload {
            pi_probs,
            n_cycles,
            seed,
            literal: false,
            pattern: OnceLock::new(),
        }
    }

    /// Builds a workload from an explicit per-PI pattern; `pi_probs` are the
    /// empirical logic-1 frequencies.
    pub fn from_pattern(pattern: Vec<BitTrace>) -> Self {
        let n_cycles = pattern.first().map_or(0, |t| t.len());
        assert!(pattern.iter().all(|t| t.len() == n_cycles), "ragged pattern");
        let pi_probs = pattern
            .iter()
            .map(|t| {
                if n_cycles == 0 {
                    0.0
                } else {
                    t.count_ones() as f64 / n_cycles as f64
                }
            })
            .collect();
        let lock = OnceLock::new();
        let _ = lock.set(pattern);
        Workload {
            pi_probs,
            n_cycles,
            seed: 0,
            literal: true,
            pattern: lock,
        }
    }

    pub fn pi_probs(&self) -> &[f64] {
        &self.pi_probs
    }

    pub fn n_cycles(&self) -> usize {
        self.n_cycles
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_pis(&self) -> usize {
        self.pi_probs.len()
    }

    pub fn is_literal(&self) -> bool {
        self.literal
    }

    pub fn pattern(&self) -> &[BitTrace] {
        self.pattern.get_or_init(|| {
            self.pi_probs
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                    rng.set_stream(i as u64 + 1);
                    let mut t = BitTrace::with_capacity(self.n_cycles);
                    for _ in 0..self.n_cycles {
                        t.push(rng.gen::<f64>() < p);
                    }
                    t
                })
                .collect()
        })
    }

    pub fn check_circuit(&self, g: &CircuitGraph) -> Result<(), SimError> {
        if self.num_pis() != g.pis().len() {
            return Err(SimError::PiCountMismatch {
                expected: g.pis().len(),
                found: self.num_pis(),
            });
        }
        Ok(())
    }
}

/// Draws PI probabilities uniformly from [0, 1) and binds the pattern seed.
pub fn random_workload(g: &CircuitGraph, n_cycles: usize, seed: u64) -> Result<Workload, SimError> {
    if n_cycles < 2 {
        return Err(SimError::TooFewCycles(n_cycles));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = (0..g.pis().len()).map(|_| rng.gen::<f64>()).collect();
    Ok(Workload::from_probs(probs, n_cycles, seed))
}

/// `pi_name,prob` CSV with header.
pub fn write_workload_csv(g: &CircuitGraph, w: &Workload) -> String {
    let mut out = String::from("pi_name,prob\n");
    for (name, p) in g.pi_names().iter().zip(w.pi_probs()) {
        out.push_str(&format!("{name},{p}\n"));
    }
    out
}

/// Reads `pi_name,prob` rows in circuit PI order.
pub fn read_workload_csv(g: &CircuitGraph, text: &str, n_cycles: usize, seed: u64) -> Result<Workload, SimError> {
    let names = g.pi_names();
    let mut probs = Vec::with_capacity(names.len());
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| SimError::Format { line: i + 1, msg };
        let (name, p) = line
            .split_once(',')
            .ok_or_else(|| err("expected `pi_name,prob`".into()))?;
        let p: f64 = p.trim().parse().map_err(|e| err(format!("bad probability: {e}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(err(format!("probability {p} outside [0,1]")));
        }
        let k = probs.len();
        if names.get(k).map(String::as_str) != Some(name.trim()) {
            return Err(err(format!(
                "expected PI `{}`, found `{}`",
                names.get(k).map_or("<none>", |s| s),
                name.trim()
            )));
        }
        probs.push(p);
    }
    if probs.len() != names.len() {
        return Err(SimError::PiCountMismatch {
            expected: names.len(),
            found: probs.len(),
        });
    }
    if n_cycles < 2 {
        return Err(SimError::TooFewCycles(n_cycles));
    }
    Ok(Workload::from_probs(probs, n_cycles, seed))
}
