// SPDX-License-Identifier: Apache-2.0
//! Command implementations. Each writes its files under `--out` and ends
//! with a run manifest.

use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::*;
use seqgnn::downstream::{self, compare_power, estimate_power, reliability_report, DownstreamError, PowerModel};
use seqgnn::gnn::{component_grad_checks, GnnError, Model, ModelCheckpoint, ModelConfig, PreparedCircuit};
use seqgnn::netlist::{decompose_gates, generate_random_circuit, parse_gate_netlist, Decomposed, NetlistError};
use seqgnn::sim::{
    derive_seed, export_saif, extract_labels, inject_faults, random_workload, read_labels_csv, read_workload_csv,
    simulate, write_labels_csv, write_workload_csv, FaultConfig, LabelSet, SimError, Workload,
};
use seqgnn::tensor::{grad_check, GradCheckConfig, ParamStore};
use seqgnn::trainer::{
    evaluate, evaluate_constant, fine_tune_reliability, fit, ConstantPredictor, Dataset, DatasetSpec, Metrics,
    TrainConfig, TrainError,
};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

const WORKLOAD_STREAM: u64 = 0;
const FAULT_STREAM: u64 = 1;
const HEAD_STREAM: u64 = 2;

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<GnnError> for CliError {
    fn from(e: GnnError) -> Self {
        TrainError::from(e).into()
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DownstreamError> for CliError {
    fn from(e: DownstreamError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| data_err(path, e))
}

struct Out<'a> {
    cli: &'a Cli,
    written: Vec<String>,
}

impl<'a> Out<'a> {
    fn new(cli: &'a Cli) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cli.out).map_err(|e| data_err(&cli.out, e))?;
        Ok(Out {
            cli,
            written: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.cli.out.join(name);
        std::fs::write(&path, contents).map_err(|e| data_err(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        self.text(name, &(text + "\n"))
    }

    fn finish(mut self, inputs: &[&Path]) -> Result<(), CliError> {
        let written: Vec<&str> = self.written.iter().map(String::as_str).collect();
        let m = RunManifest::new(self.cli, inputs, &written)?;
        self.json(MANIFEST_FILE, &m)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::GenData(a) => gen_data(cli, a),
        Command::Simulate(a) => simulate_cmd(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Eval(a) => eval_cmd(cli, a),
        Command::Power(a) => power_cmd(cli, a),
        Command::Reliability(a) => reliability_cmd(cli, a),
        Command::Gradcheck(a) => gradcheck_cmd(cli, a),
        Command::Replay(a) => replay(cli, a),
    }
}

fn fault_config(a: &FaultArgs, seed: u64) -> FaultConfig {
    FaultConfig {
        error_rate: a.error_rate,
        n_patterns: a.fault_patterns,
        cycles_per_pattern: a.fault_cycles,
        seed,
    }
}

fn gen_data(cli: &Cli, a: &GenDataArgs) -> Result<(), CliError> {
    let spec = DatasetSpec {
        count: a.count,
        min_nodes: a.min_nodes,
        max_nodes: a.max_nodes,
        n_cycles: a.cycles,
        val_fraction: a.val_fraction,
        test_fraction: a.test_fraction,
        seed: cli.seed,
    };
    let start = Instant::now();
    let mut ds = seqgnn::trainer::build_dataset(&spec)?;
    if a.error_labels {
        seqgnn::trainer::attach_error_labels(&mut ds, &fault_config(&a.faults, derive_seed(cli.seed, FAULT_STREAM)))?;
    }
    ds.save(&cli.out)?;
    let nodes: usize = ds.entries.iter().map(|e| e.meta.nodes).sum();
    println!("circuits  {:>8}", ds.len());
    println!("nodes     {:>8}", nodes);
    println!(
        "split     {:>8}",
        format!(
            "{}/{}/{}",
            ds.manifest.split.train.len(),
            ds.manifest.split.val.len(),
            ds.manifest.split.test.len()
        )
    );
    println!("errors    {:>8}", if a.error_labels { "yes" } else { "no" });
    eprintln!("built in {:.1}s", start.elapsed().as_secs_f64());
    let mut out = Out::new(cli)?;
    out.written = vec![
        "manifest.json".into(),
        "circuits/".into(),
        "workloads/".into(),
        "labels/".into(),
    ];
    out.finish(&[])
}

fn load_circuit(path: &Path) -> Result<Decomposed, CliError> {
    let text = read(path)?;
    let parsed = parse_gate_netlist(&text).and_then(|gn| decompose_gates(&gn));
    parsed.map_err(|e: NetlistError| data_err(path, e))
}

/// The workload and the input files it came from.
fn load_workload<'a>(d: &Decomposed, a: &'a WorkloadArgs, seed: u64) -> Result<(Workload, Vec<&'a Path>), CliError> {
    let g = &d.graph;
    let wseed = derive_seed(seed, WORKLOAD_STREAM);
    if let Some(p) = &a.testbench {
        let w = downstream::parse_testbench(g, &read(p)?).map_err(|e| data_err(p, e))?;
        return Ok((w, vec![p.as_path()]));
    }
    if let Some(p) = &a.workload {
        let w = read_workload_csv(g, &read(p)?, a.cycles, wseed).map_err(|e| data_err(p, e))?;
        return Ok((w, vec![p.as_path()]));
    }
    Ok((random_workload(g, a.cycles, wseed)?, Vec::new()))
}

fn simulated_labels(d: &Decomposed, w: &Workload) -> Result<LabelSet, CliError> {
    Ok(extract_labels(&simulate(&d.graph, w)?)?)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs) -> Result<(), CliError> {
    let d = load_circuit(&a.netlist)?;
    let g = &d.graph;
    let (w, mut inputs) = load_workload(&d, &a.workload, cli.seed)?;
    let mut labels = simulated_labels(&d, &w)?;
    if a.errors {
        let f = inject_faults(g, &w, &fault_config(&a.faults, derive_seed(cli.seed, FAULT_STREAM)))?;
        labels.err01 = Some(f.err01);
        labels.err10 = Some(f.err10);
    }
    let mut out = Out::new(cli)?;
    out.text("circuit.bench", &g.to_netlist_text())?;
    out.text("workload.csv", &write_workload_csv(g, &w))?;
    out.text("labels.csv", &write_labels_csv(&labels))?;
    if a.saif {
        let saif = export_saif(g, &labels, w.n_cycles(), a.clock_period_ns)?;
        out.text(&format!("{}.saif", g.name()), &saif)?;
    }
    println!("circuit     {}", g.name());
    println!("nodes       {}", g.len());
    println!("cycles      {}", w.n_cycles());
    println!("mean lg     {:.6}", mean(&labels.logic_prob));
    println!("mean tr     {:.6}", mean(&labels.toggle_rate()));
    if let (Some(e01), Some(e10)) = (&labels.err01, &labels.err10) {
        println!("mean err01  {:.6}", mean(e01));
        println!("mean err10  {:.6}", mean(e10));
    }
    inputs.insert(0, &a.netlist);
    out.finish(&inputs)
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    let ckpt: ModelCheckpoint = serde_json::from_str(&read(path)?).map_err(|e| data_err(path, e))?;
    Model::from_checkpoint(&ckpt).map_err(|e| data_err(path, e))
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<(), CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let mut inputs = vec![a.dataset.as_path()];
    let mut model = match &a.init {
        Some(p) => {
            inputs.push(p);
            load_model(p)?
        }
        None => Model::new(ModelConfig {
            variant: a.model.variant,
            aggregator: a.model.aggregator,
            hidden_dim: a.model.hidden,
            iterations: a.model.iterations,
            seed: cli.seed,
            error_head: false,
        })?,
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        lr: a.lr,
        seed: cli.seed,
        eval_seed: cli.seed,
    };
    let (train, val) = (ds.train(), ds.val());
    let mut record = match a.objective {
        ObjectiveArg::Errors if !model.has_error_head() => {
            fine_tune_reliability(&mut model, &train, &val, &cfg, derive_seed(cli.seed, HEAD_STREAM))?
        }
        o => fit(&mut model, &train, &val, &cfg, o.into())?,
    };
    record.checkpoint = Some("checkpoint.json".into());

    println!(
        "{:>5}  {:>10}  {:>10}  {:>10}  {:>10}",
        "epoch", "loss", "val tr", "val lg", "val err"
    );
    let row = |label: String, loss: Option<f64>, m: Option<Metrics>| {
        let f = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.5}"));
        println!(
            "{label:>5}  {:>10}  {:>10}  {:>10}  {:>10}",
            f(loss),
            f(m.map(|m| m.avg_pe_tr)),
            f(m.map(|m| m.avg_pe_lg)),
            f(m.and_then(|m| m.avg_pe_err))
        );
    };
    row("0".into(), None, record.initial_val);
    for e in &record.epochs {
        row(e.epoch.to_string(), Some(e.loss_total), e.val);
    }
    eprintln!("trained {} steps in {:.1}s", record.steps, record.wall_clock_s);

    let mut out = Out::new(cli)?;
    out.json("checkpoint.json", &model.to_checkpoint())?;
    out.json("run_record.json", &record)?;
    out.finish(&inputs)
}

#[derive(Serialize)]
struct EvalReport {
    split: SplitArg,
    circuits: usize,
    model: Metrics,
    constant: Metrics,
}

fn eval_cmd(cli: &Cli, a: &EvalArgs) -> Result<(), CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let model = load_model(&a.checkpoint)?;
    let entries = match a.split {
        SplitArg::Train => ds.train(),
        SplitArg::Val => ds.val(),
        SplitArg::Test => ds.test(),
        SplitArg::All => ds.entries.iter().collect(),
    };
    if entries.is_empty() {
        return Err(CliError::Data(format!("split {:?} is empty", a.split)));
    }
    let fit_on = if ds.train().is_empty() {
        entries.clone()
    } else {
        ds.train()
    };
    let report = EvalReport {
        split: a.split,
        circuits: entries.len(),
        model: evaluate(&model, &entries, cli.seed)?,
        constant: evaluate_constant(&ConstantPredictor::fit(&fit_on), &entries),
    };
    println!(
        "{:<10}  {:>10}  {:>10}  {:>10}",
        "predictor", "avg pe tr", "avg pe lg", "avg pe err"
    );
    for (name, m) in [("model", report.model), ("constant", report.constant)] {
        println!(
            "{name:<10}  {:>10.5}  {:>10.5}  {:>10}",
            m.avg_pe_tr,
            m.avg_pe_lg,
            m.avg_pe_err.map_or("-".to_string(), |x| format!("{x:.5}"))
        );
    }
    let mut out = Out::new(cli)?;
    out.json("metrics.json", &report)?;
    out.finish(&[&a.dataset, &a.checkpoint])
}

/// The estimate side: model predictions or a label file.
fn estimated_labels<'a>(
    d: &Decomposed,
    w: &Workload,
    a: &'a EstimateArgs,
    seed: u64,
) -> Result<Option<(LabelSet, &'a Path)>, CliError> {
    if let Some(p) = &a.checkpoint {
        let model = load_model(p)?;
        let pred = model.predict(&PreparedCircuit::new(&d.graph), w, seed)?;
        return Ok(Some((pred.to_labels(), p)));
    }
    if let Some(p) = &a.labels {
        let labels = read_labels_csv(&read(p)?).map_err(|e| data_err(p, e))?;
        if labels.len() != d.graph.len() {
            return Err(data_err(
                p,
                format!("{} label rows for a {}-node circuit", labels.len(), d.graph.len()),
            ));
        }
        return Ok(Some((labels, p)));
    }
    Ok(None)
}

#[derive(Serialize)]
struct PowerReport {
    circuit: String,
    nodes: usize,
    recorded_nodes: usize,
    cycles: usize,
    power_model: PowerModel,
    ground_truth_w: f64,
    predicted_w: Option<f64>,
    rel_error: Option<f64>,
}

fn power_cmd(cli: &Cli, a: &PowerArgs) -> Result<(), CliError> {
    let d = load_circuit(&a.netlist)?;
    let g = &d.graph;
    let mut inputs = vec![a.netlist.as_path()];
    let pm = match &a.power_config {
        Some(p) => {
            inputs.push(p);
            serde_json::from_str(&read(p)?).map_err(|e| data_err(p, e))?
        }
        None => PowerModel::default(),
    };
    let (w, wi) = load_workload(&d, &a.workload, cli.seed)?;
    inputs.extend(wi);
    let truth = simulated_labels(&d, &w)?;
    let est = estimated_labels(&d, &w, &a.estimate, cli.seed)?;

    let (gt, pred, rel) = match &est {
        Some((l, p)) => {
            inputs.push(p);
            let c = compare_power(g, &truth.toggle_rate(), &l.toggle_rate(), &pm, &d.fanout_map)?;
            (c.ground_truth_w, Some(c.predicted_w), Some(c.rel_error))
        }
        None => (estimate_power(g, &truth.toggle_rate(), &pm, &d.fanout_map)?, None, None),
    };
    let report = PowerReport {
        circuit: g.name().to_string(),
        nodes: g.len(),
        recorded_nodes: d.fanout_map.len(),
        cycles: w.n_cycles(),
        power_model: pm,
        ground_truth_w: gt,
        predicted_w: pred,
        rel_error: rel,
    };
    println!("circuit       {}", report.circuit);
    println!("ground truth  {:.6e} W", gt);
    if let (Some(p), Some(r)) = (pred, rel) {
        println!("estimate      {:.6e} W", p);
        println!("rel error     {:.4}%", 100.0 * r);
    }
    let mut out = Out::new(cli)?;
    out.json("power.json", &report)?;
    out.finish(&inputs)
}

#[derive(Serialize)]
struct ReliabilityOut {
    circuit: String,
    outputs: usize,
    fault: FaultConfig,
    ground_truth_score: f64,
    estimate: Option<downstream::ReliabilityReport>,
}

fn reliability_cmd(cli: &Cli, a: &ReliabilityArgs) -> Result<(), CliError> {
    let d = load_circuit(&a.netlist)?;
    let g = &d.graph;
    let mut inputs = vec![a.netlist.as_path()];
    let (w, wi) = load_workload(&d, &a.workload, cli.seed)?;
    inputs.extend(wi);
    let fault = fault_config(&a.faults, derive_seed(cli.seed, FAULT_STREAM));
    let mut truth = simulated_labels(&d, &w)?;
    let f = inject_faults(g, &w, &fault)?;
    truth.err01 = Some(f.err01);
    truth.err10 = Some(f.err10);
    let gt = reliability_report(g, &truth, None)?.circuit_score;

    let estimate = match estimated_labels(&d, &w, &a.estimate, cli.seed)? {
        Some((l, p)) => {
            inputs.push(p);
            if !l.has_errors() {
                return Err(data_err(p, "no error probabilities (train with --objective errors)"));
            }
            Some(reliability_report(g, &l, Some(&truth))?)
        }
        None => None,
    };
    println!("circuit       {}", g.name());
    println!("ground truth  {:.6}", gt);
    if let Some(r) = &estimate {
        println!("estimate      {:.6}", r.circuit_score);
        println!("rel error     {:.4}%", 100.0 * r.rel_error.unwrap_or(f64::NAN));
    }
    let report = ReliabilityOut {
        circuit: g.name().to_string(),
        outputs: g.outputs().len(),
        fault,
        ground_truth_score: gt,
        estimate,
    };
    let mut out = Out::new(cli)?;
    out.json("reliability.json", &report)?;
    out.finish(&inputs)
}

fn gradcheck_cmd(cli: &Cli, a: &GradcheckArgs) -> Result<(), CliError> {
    if a.nodes < 5 {
        return Err(CliError::Usage("--nodes must be at least 5".into()));
    }
    let n_pi = (a.nodes / 4).max(2);
    let n_ff = (a.nodes / 8).max(1);
    let g = generate_random_circuit(n_pi, a.nodes - n_pi - n_ff, n_ff, cli.seed);
    let w = random_workload(&g, 1000, derive_seed(cli.seed, WORKLOAD_STREAM))?;
    let mut labels = extract_labels(&simulate(&g, &w)?)?;
    let mut model = Model::new(ModelConfig {
        variant: a.model.variant,
        aggregator: a.model.aggregator,
        hidden_dim: a.model.hidden,
        iterations: a.model.iterations,
        seed: cli.seed,
        error_head: false,
    })?;
    let objective = a.objective.into();
    if a.objective == ObjectiveArg::Errors {
        let fault = FaultConfig {
            error_rate: 0.05,
            n_patterns: 50,
            cycles_per_pattern: 20,
            seed: derive_seed(cli.seed, FAULT_STREAM),
        };
        let f = inject_faults(&g, &w, &fault)?;
        labels.err01 = Some(f.err01);
        labels.err10 = Some(f.err10);
        model.add_error_head(derive_seed(cli.seed, HEAD_STREAM));
    }
    let prep = PreparedCircuit::new(&g);
    // Surfaces input errors once; afterwards only tensor errors can occur.
    model.loss_and_grad(&prep, &w, &labels, objective, cli.seed)?;
    let store = model.store().clone();
    let loss = |s: &ParamStore| {
        let mut m = model.clone();
        *m.store_mut() = s.clone();
        m.loss_and_grad(&prep, &w, &labels, objective, cli.seed)
            .map(|(p, gr)| (p.total, gr))
            .map_err(|e| match e {
                GnnError::Tensor(t) => t,
                other => unreachable!("validated above: {other}"),
            })
    };
    let cfg = GradCheckConfig {
        tol: a.tol,
        samples_per_param: a.samples,
        seed: cli.seed,
        ..Default::default()
    };
    let report = grad_check(&store, loss, &cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    let ccfg = GradCheckConfig {
        tol: a.component_tol,
        ..cfg
    };
    let components =
        component_grad_checks(a.model.hidden, cli.seed, &ccfg).map_err(|e| CliError::Numerical(e.to_string()))?;

    println!(
        "{:<26}  {:>8}  {:>12}  {:>8}  result",
        "check", "entries", "max rel err", "tol"
    );
    let mut failed = Vec::new();
    let rows = std::iter::once(("model", &report)).chain(components.iter().map(|c| (c.component.as_str(), &c.report)));
    for (name, r) in rows {
        println!(
            "{name:<26}  {:>8}  {:>12.3e}  {:>8.1e}  {}",
            r.entries.len(),
            r.max_rel_error,
            r.tol,
            if r.passed { "ok" } else { "FAILED" }
        );
        if !r.passed {
            failed.push(format!("{name} ({:.3e} > {:.1e})", r.max_rel_error, r.tol));
        }
    }
    let mut out = Out::new(cli)?;
    out.json(
        "gradcheck.json",
        &serde_json::json!({ "model": report, "components": components }),
    )?;
    out.finish(&[])?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "gradient check failed: {}",
            failed.join(", ")
        )))
    }
}

fn replay(cli: &Cli, a: &ReplayArgs) -> Result<(), CliError> {
    let m = RunManifest::load(&a.manifest)?;
    if matches!(m.command, Command::Replay(_)) {
        return Err(CliError::Usage("a replay manifest cannot be replayed".into()));
    }
    m.verify_inputs()?;
    let inner = Cli {
        seed: m.seed,
        out: cli.out.clone(),
        threads: cli.threads,
        verbose: cli.verbose,
        command: m.command,
    };
    run(&inner)
}
