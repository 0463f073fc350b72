// SPDX-License-Identifier: Apache-2.0
//! Randomized invariants across modules.

use ndarray::Array2;
use proptest::prelude::*;
use seqgnn::downstream::{
    all_nodes, estimate_power, estimate_reliability, parse_testbench, write_testbench, PowerModel,
};
use seqgnn::gnn::{Model, ModelConfig, PreparedCircuit};
use seqgnn::netlist::{generate_random_circuit, parse_netlist, CircuitGraph, NodeKind};
use seqgnn::sim::{extract_labels, random_workload, simulate, Workload};
use seqgnn::tensor::{softmax_weights, Adam, AdamConfig, ParamStore, Tape};

fn circuit() -> impl Strategy<Value = CircuitGraph> {
    (2usize..6, 3usize..40, 0usize..5, any::<u64>())
        .prop_map(|(pi, gates, ff, seed)| generate_random_circuit(pi, gates, ff, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn netlist_text_roundtrips(g in circuit()) {
        let back = parse_netlist(&g.to_netlist_text()).unwrap();
        prop_assert_eq!(back.nodes(), g.nodes());
        prop_assert_eq!(back.outputs(), g.outputs());
        prop_assert_eq!(back.levels(), g.levels());
    }

    #[test]
    fn levels_increase_along_broken_edges(g in circuit()) {
        for v in 0..g.len() {
            match g.kind(v) {
                NodeKind::Pi => prop_assert_eq!(g.level(v), 0),
                NodeKind::Dff => prop_assert_eq!(g.level(v), 1),
                _ => {
                    for &u in g.fanins(v) {
                        prop_assert!(g.level(u) < g.level(v));
                    }
                }
            }
        }
    }

    #[test]
    fn labels_are_probabilities(g in circuit(), seed in any::<u64>()) {
        let w = random_workload(&g, 200, seed).unwrap();
        let l = extract_labels(&simulate(&g, &w).unwrap()).unwrap();
        let step = 1.0 / 199.0;
        for v in 0..g.len() {
            for x in [l.logic_prob[v], l.tr01[v], l.tr10[v]] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            // rises and falls alternate
            prop_assert!((l.tr01[v] - l.tr10[v]).abs() <= step + 1e-12);
            prop_assert!(l.tr01[v] + l.tr10[v] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn dff_output_is_delayed_input(g in circuit(), seed in any::<u64>()) {
        let w = random_workload(&g, 100, seed).unwrap();
        let tr = simulate(&g, &w).unwrap();
        for &q in g.dffs() {
            let d = g.fanins(q)[0];
            prop_assert!(!tr.nodes[q].get(0));
            for t in 1..tr.n_cycles {
                prop_assert_eq!(tr.nodes[q].get(t), tr.nodes[d].get(t - 1));
            }
        }
    }

    #[test]
    fn softmax_weights_sum_to_one(scores in prop::collection::vec(-50.0f64..50.0, 1..20)) {
        let w = softmax_weights(&scores).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn adam_with_zero_lr_is_identity(vals in prop::collection::vec(-3.0f64..3.0, 6), steps in 1usize..5) {
        let mut store = ParamStore::new();
        let id = store.add("p", Array2::from_shape_vec((2, 3), vals).unwrap());
        let before = store.clone();
        let mut opt = Adam::new(AdamConfig { lr: 0.0, ..Default::default() });
        for _ in 0..steps {
            let grads = {
                let mut t = Tape::new(&store);
                let p = t.param(id);
                let loss = t.l1(p, Array2::zeros((2, 3))).unwrap();
                t.backward(loss)
            };
            opt.step(&mut store, &grads);
        }
        prop_assert_eq!(store, before);
    }

    #[test]
    fn power_is_linear_and_monotone(
        g in circuit(),
        scale in 0.0f64..4.0,
        bump in 0.0f64..1e-15,
        kind in 0usize..4,
    ) {
        let w = random_workload(&g, 100, 1).unwrap();
        let tr = extract_labels(&simulate(&g, &w).unwrap()).unwrap().toggle_rate();
        let pm = PowerModel::default();
        let nodes = all_nodes(&g);
        let p = estimate_power(&g, &tr, &pm, &nodes).unwrap();
        let scaled: Vec<f64> = tr.iter().map(|x| x * scale).collect();
        let ps = estimate_power(&g, &scaled, &pm, &nodes).unwrap();
        prop_assert!((ps - scale * p).abs() <= 1e-12 * (1.0 + ps.abs()));
        let mut bigger = pm.clone();
        bigger.cap[kind] += bump;
        prop_assert!(estimate_power(&g, &tr, &bigger, &nodes).unwrap() >= p);
    }

    #[test]
    fn reliability_score_is_a_probability(
        g in circuit(),
        e in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 60),
    ) {
        let n = g.len();
        let lp: Vec<f64> = (0..n).map(|v| e[v % e.len()].0).collect();
        let e01: Vec<f64> = (0..n).map(|v| e[v % e.len()].1).collect();
        let e10: Vec<f64> = (0..n).map(|v| e[v % e.len()].2).collect();
        let r = estimate_reliability(&g, &lp, &e01, &e10).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn testbench_roundtrip(g in circuit(), seed in any::<u64>(), cycles in 1usize..50) {
        let w = Workload::from_probs(vec![0.5; g.pis().len()], cycles, seed);
        let literal = parse_testbench(&g, &write_testbench(&g, &w)).unwrap();
        prop_assert_eq!(literal.pattern(), w.pattern());
        prop_assert_eq!(parse_testbench(&g, &write_testbench(&g, &literal)).unwrap(), literal);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn predictions_lie_in_unit_interval(g in circuit(), seed in any::<u64>()) {
        let m = Model::new(ModelConfig { hidden_dim: 8, iterations: 2, ..Default::default() }).unwrap();
        let w = random_workload(&g, 50, seed).unwrap();
        let p = m.predict(&PreparedCircuit::new(&g), &w, seed).unwrap();
        prop_assert!(p.tr.iter().chain(p.lg.iter()).all(|x| (0.0..=1.0).contains(x)));
    }
}
