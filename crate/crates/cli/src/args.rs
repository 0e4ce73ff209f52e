use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fjsp_core::heuristics::RulePair;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "fjsp", version, about = "Flexible job-shop scheduling toolkit", args_override_self = true)]
pub struct Cli {
    /// TOML file of flag defaults; top-level keys apply to any subcommand
    /// that has the flag, `[subcommand]` tables to that subcommand only
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Where to write the run manifest (default: `<output>.manifest.json`)
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Solve an instance exactly, or re-solve toward a reference solution
    Solve(SolveArgs),
    /// Run one dispatching rule pair
    Heuristic(HeuristicArgs),
    /// Generate a perturbed, labelled dataset from a base instance
    GenData(GenDataArgs),
    /// Add scheduling samples for branched assignment candidates
    Augment(AugmentArgs),
    /// Train one network stage
    Train(TrainArgs),
    /// Predict a schedule with trained networks
    Predict(PredictArgs),
    /// Turn predicted start times into a feasible schedule
    Recover(RecoverArgs),
    /// Benchmark heuristics and trained models on a dataset split
    Evaluate(EvaluateArgs),
    /// Re-run the command recorded in a manifest
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Heuristic(_) => "heuristic",
            Command::GenData(_) => "gen-data",
            Command::Augment(_) => "augment",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Recover(_) => "recover",
            Command::Evaluate(_) => "evaluate",
            Command::Replay(_) => "replay",
        }
    }
}

fn default_workers() -> usize {
    fjsp_core::par::available_workers()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Makespan,
    SymmetryBreak,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Instance in `.fjs` format
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "makespan")]
    pub mode: ModeArg,
    /// Solution JSON to steer toward in symmetry-break mode
    #[arg(long, required_if_eq("mode", "symmetry-break"))]
    pub reference: Option<PathBuf>,
    #[arg(long, env = "FJSP_TIME_LIMIT", default_value_t = 10.0)]
    pub time_limit: f64,
    /// Randomize tie-breaking among equal branches
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the solution as JSON
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HeuristicArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// One of fifo_spt, fifo_eet, mopnr_spt, mopnr_eet, lwkr_spt, lwkr_eet,
    /// mwkr_spt, mwkr_eet
    #[arg(long, value_parser = parse_rule)]
    pub rule: RulePair,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_rule(s: &str) -> Result<RulePair, String> {
    s.parse().map_err(|e: fjsp_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelArg {
    /// Nearest optimum to the reference solution
    SymmetryBreaking,
    /// Independent solves with randomized tie-breaking
    Standard,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenDataArgs {
    /// Base instance in `.fjs` format
    #[arg(long)]
    pub base: PathBuf,
    /// Impacted machine (0-based)
    #[arg(long, default_value_t = 0)]
    pub machine: usize,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, env = "FJSP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "FJSP_WORKERS", default_value_t = default_workers())]
    pub workers: usize,
    /// Slowdown of the reference instance
    #[arg(long, default_value_t = 0.25)]
    pub reference_delay: f64,
    #[arg(long, default_value_t = 1.0)]
    pub factor_min: f64,
    #[arg(long, default_value_t = 1.5)]
    pub factor_max: f64,
    /// Draw the impacted machine per instance
    #[arg(long)]
    pub vary_machine: bool,
    #[arg(long, value_enum, default_value = "symmetry-breaking")]
    pub labels: LabelArg,
    #[arg(long, env = "FJSP_TIME_LIMIT", default_value_t = 10.0)]
    pub time_limit: f64,
    /// Store solve times in records (output is then not reproducible)
    #[arg(long)]
    pub record_timings: bool,
    /// Dataset path; the reference solution and split are written next to it
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AugmentArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Trained assignment-stage checkpoint
    #[arg(long)]
    pub assign_model: PathBuf,
    /// Reference solution JSON written by gen-data
    #[arg(long)]
    pub reference: PathBuf,
    /// Number of highest-entropy tasks to branch on
    #[arg(long, default_value_t = 2)]
    pub branch_size: usize,
    #[arg(long, default_value_t = 20000)]
    pub cap: usize,
    #[arg(long, env = "FJSP_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Label candidates by a plain optimal solve instead of steering toward
    /// the reference starts
    #[arg(long)]
    pub standard: bool,
    #[arg(long, env = "FJSP_WORKERS", default_value_t = default_workers())]
    pub workers: usize,
    #[arg(long, env = "FJSP_TIME_LIMIT", default_value_t = 10.0)]
    pub time_limit: f64,
    /// Scheduling-stage training records
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageArg {
    Assign,
    Sched,
    Joint,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub stage: StageArg,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Training records to use instead of the split's train part
    #[arg(long)]
    pub train_data: Option<PathBuf>,
    /// Search encoder depth {2,3} x decoder depth {2,3} x rate {1e-1,1e-2,1e-3}
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 2)]
    pub encoder_layers: usize,
    #[arg(long, default_value_t = 2)]
    pub decoder_layers: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 8)]
    pub filters: usize,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.2)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Weight of the constraint-violation penalty
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, env = "FJSP_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "FJSP_WORKERS", default_value_t = default_workers())]
    pub workers: usize,
    /// Per-epoch history as JSON lines (default: `<output>.history.jsonl`)
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Checkpoint path
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, requires = "sched_model")]
    pub assign_model: Option<PathBuf>,
    #[arg(long, requires = "assign_model")]
    pub sched_model: Option<PathBuf>,
    /// One-stage joint model, instead of the two stages
    #[arg(long, conflicts_with_all = ["assign_model", "sched_model"], required_unless_present = "assign_model")]
    pub encoder_model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub branch_size: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RecoverArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON object with `assignment` (machine per task) and `starts`
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetArg {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub subset: SubsetArg,
    #[arg(long, requires = "sched_model")]
    pub assign_model: Option<PathBuf>,
    #[arg(long, requires = "assign_model")]
    pub sched_model: Option<PathBuf>,
    #[arg(long)]
    pub encoder_model: Option<PathBuf>,
    /// Branch sizes to evaluate for the two-stage model
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub branch_size: Vec<usize>,
    /// Also run the exact solver as a method
    #[arg(long)]
    pub exact: bool,
    /// Re-solve references instead of trusting record makespans
    #[arg(long)]
    pub recompute_reference: bool,
    #[arg(long, env = "FJSP_TIME_LIMIT", default_value_t = 10.0)]
    pub time_limit: f64,
    #[arg(long, env = "FJSP_WORKERS", default_value_t = default_workers())]
    pub workers: usize,
    /// Machine-readable report
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    #[arg(value_name = "MANIFEST")]
    pub run: PathBuf,
}
