// SPDX-License-Identifier: Apache-2.0
//! Monte Carlo transient-fault injection.
//!
//! Each pattern is simulated twice from reset with identical inputs. In the
//! faulty run every gate and DFF output flips independently with
//! probability `error_rate` per cycle; PIs are never faulted. The 0→1 error
//! probability of a node is P(faulty = 1 | fault-free = 0) pooled over all
//! (pattern, cycle) pairs, and 1→0 symmetrically.

use super::simulate::Program;
use super::{derive_seed, BitTrace, SimError, Traces, Workload};
use crate::netlist::CircuitGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub error_rate: f64,
    pub n_patterns: usize,
    pub cycles_per_pattern: usize,
    pub seed: u64,
}

impl Default for FaultConfig {
    fn default() -> Self {
        FaultConfig {
            error_rate: 0.0005,
            n_patterns: 1000,
            cycles_per_pattern: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultLabels {
    pub err01: Vec<f64>,
    pub err10: Vec<f64>,
    /// Number of (pattern, cycle) samples with fault-free value 0 / 1.
    pub zeros: Vec<u64>,
    pub ones: Vec<u64>,
}

fn check_rate(rate: f64) {
    assert!((0.0..=1.0).contains(&rate), "error rate {rate} outside [0,1]");
}

/// Simulates `w` with fault injection, returning the faulty traces.
pub fn simulate_faulty(g: &CircuitGraph, w: &Workload, error_rate: f64, fault_seed: u64) -> Result<Traces, SimError> {
    check_rate(error_rate);
    w.check_circuit(g)?;
    let prog = Program::new(g);
    let mut rng = ChaCha8Rng::seed_from_u64(fault_seed);
    let mut state = vec![false; prog.dffs.len()];
    let mut vals = vec![false; prog.n];
    let pattern = w.pattern();
    let mut nodes: Vec<BitTrace> = (0..prog.n).map(|_| BitTrace::with_capacity(w.n_cycles())).collect();
    for t in 0..w.n_cycles() {
        let faults = (error_rate > 0.0).then_some((&mut rng, error_rate));
        prog.step(pattern.iter().map(|p| p.get(t)), &mut state, &mut vals, faults);
        for (trace, &b) in nodes.iter_mut().zip(&vals) {
            trace.push(b);
        }
    }
    Ok(Traces {
        n_cycles: w.n_cycles(),
        nodes,
    })
}

pub fn inject_faults(g: &CircuitGraph, w: &Workload, cfg: &FaultConfig) -> Result<FaultLabels, SimError> {
    check_rate(cfg.error_rate);
    w.check_circuit(g)?;
    let prog = Program::new(g);
    let n = prog.n;
    let mut zeros = vec![0u64; n];
    let mut ones = vec![0u64; n];
    let mut flips01 = vec![0u64; n];
    let mut flips10 = vec![0u64; n];

    let mut good_state = vec![false; prog.dffs.len()];
    let mut bad_state = vec![false; prog.dffs.len()];
    let mut good = vec![false; n];
    let mut bad = vec![false; n];
    for k in 0..cfg.n_patterns as u64 {
        let pw = Workload::from_probs(
            w.pi_probs().to_vec(),
            cfg.cycles_per_pattern,
            derive_seed(cfg.seed, 2 * k),
        );
        let pattern = pw.pattern();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 2 * k + 1));
        good_state.fill(false);
        bad_state.fill(false);
        for t in 0..cfg.cycles_per_pattern {
            prog.step::<ChaCha8Rng>(pattern.iter().map(|p| p.get(t)), &mut good_state, &mut good, None);
            let faults = (cfg.error_rate > 0.0).then_some((&mut rng, cfg.error_rate));
            prog.step(pattern.iter().map(|p| p.get(t)), &mut bad_state, &mut bad, faults);
            for v in 0..n {
                if good[v] {
                    ones[v] += 1;
                    flips10[v] += u64::from(!bad[v]);
                } else {
                    zeros[v] += 1;
                    flips01[v] += u64::from(bad[v]);
                }
            }
        }
    }
    let ratio = |num: &[u64], den: &[u64]| -> Vec<f64> {
        num.iter()
            .zip(den)
            .map(|(&a, &b)| if b == 0 { 0.0 } else { a as f64 / b as f64 })
            .collect()
    };
    Ok(FaultLabels {
        err01: ratio(&flips01, &zeros),
        err10: ratio(&flips10, &ones),
        zeros,
        ones,
    })
}
