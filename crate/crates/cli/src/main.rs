// SPDX-License-Identifier: Apache-2.0
//! `seqgnn` command-line driver.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqgnn::gnn::{Aggregator, Objective, Variant};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(
    name = "seqgnn",
    version,
    about = "Learn and apply node representations of sequential netlists"
)]
pub struct Cli {
    /// Base seed for every random choice of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; nothing is written elsewhere.
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip, default)]
    pub out: PathBuf,
    /// Worker-thread cap.
    #[arg(long, global = true)]
    #[serde(skip, default)]
    pub threads: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip, default)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate and simulate a synthetic training corpus.
    GenData(GenDataArgs),
    /// Simulate one netlist under one workload and write its labels.
    Simulate(SimulateArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Report average prediction error of a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Compare predicted and simulated dynamic power.
    Power(PowerArgs),
    /// Compare predicted and Monte Carlo reliability scores.
    Reliability(ReliabilityArgs),
    /// Finite-difference check of the model gradients.
    Gradcheck(GradcheckArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 50)]
    pub min_nodes: usize,
    #[arg(long, default_value_t = 300)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = seqgnn::sim::DEFAULT_CYCLES)]
    pub cycles: usize,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.0)]
    pub test_fraction: f64,
    /// Also attach Monte Carlo error-probability labels.
    #[arg(long)]
    pub error_labels: bool,
    #[command(flatten)]
    pub faults: FaultArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FaultArgs {
    /// Per-gate, per-cycle flip probability.
    #[arg(long, default_value_t = 0.0005)]
    pub error_rate: f64,
    #[arg(long, default_value_t = 1000)]
    pub fault_patterns: usize,
    #[arg(long, default_value_t = 100)]
    pub fault_cycles: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct WorkloadArgs {
    /// `pi_name,prob` CSV; random probabilities when neither source is given.
    #[arg(long, conflicts_with = "testbench")]
    pub workload: Option<PathBuf>,
    /// Per-cycle input trace (`PIS a,b,...` header, then 0/1 rows).
    #[arg(long)]
    pub testbench: Option<PathBuf>,
    #[arg(long, default_value_t = seqgnn::sim::DEFAULT_CYCLES)]
    pub cycles: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// Also write a SAIF activity file.
    #[arg(long)]
    pub saif: bool,
    #[arg(long, default_value_t = 1.0)]
    pub clock_period_ns: f64,
    /// Also estimate error probabilities by fault injection.
    #[arg(long)]
    pub errors: bool,
    #[command(flatten)]
    pub faults: FaultArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    Probabilities,
    Errors,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::Probabilities => Objective::Probabilities,
            ObjectiveArg::Errors => Objective::Errors,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// seq-gnn, dag-rec-gnn or dag-conv-gnn.
    #[arg(long, default_value = "seq-gnn")]
    pub variant: Variant,
    /// dual-attention, attention or conv-sum.
    #[arg(long, default_value = "dual-attention")]
    pub aggregator: Aggregator,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    /// Propagation iterations (forced to 1 for dag-conv-gnn).
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Probabilities)]
    pub objective: ObjectiveArg,
    /// Continue from this checkpoint instead of a fresh model.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitArg::Val)]
    pub split: SplitArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    /// Model whose predictions are compared to simulation.
    #[arg(long, conflicts_with = "labels")]
    pub checkpoint: Option<PathBuf>,
    /// Label CSV used as the estimate instead of a model.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PowerArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub estimate: EstimateArgs,
    /// JSON with `vdd`, `clock_freq_hz` and `cap_fF`; built-in defaults otherwise.
    #[arg(long)]
    pub power_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReliabilityArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub estimate: EstimateArgs,
    #[command(flatten)]
    pub faults: FaultArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub model: GradcheckModelArgs,
    /// Size of the random test circuit.
    #[arg(long, default_value_t = 12)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Probabilities)]
    pub objective: ObjectiveArg,
    /// Tolerance for the whole-model check.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Tolerance for the single-component checks.
    #[arg(long, default_value_t = 1e-4)]
    pub component_tol: f64,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GradcheckModelArgs {
    #[arg(long, default_value = "seq-gnn")]
    pub variant: Variant,
    #[arg(long, default_value = "dual-attention")]
    pub aggregator: Aggregator,
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// Process exit status classes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))
            .and_then(|pool| pool.install(|| commands::run(&cli))),
        None => commands::run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message().lines().next().unwrap_or_default());
            ExitCode::from(e.code())
        }
    }
}
