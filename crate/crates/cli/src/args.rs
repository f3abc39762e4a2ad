use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use hwroute::sim::PolicyKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "hwroute", version, about = "Many-server routing experiments in the Halfin-Whitt regime")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Command {
    /// Check a scenario file and print its limit coefficients.
    Validate(ValidateArgs),
    /// Compare scaled marginals under PI0 with the limit diffusion across the ladder.
    Converge(ConvergeArgs),
    /// Idle-metric trend and the two concentration bounds.
    Trends(TrendsArgs),
    /// Policy comparison table and pathwise lower-bound audits.
    Compare(CompareArgs),
    /// Simulate one replication and export its path.
    Simulate(SimulateArgs),
    /// Terminal values of the limit diffusion.
    Sde(SdeArgs),
    /// Replay a manifest written by an earlier command.
    #[serde(skip)]
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Converge(_) => "converge",
            Command::Trends(_) => "trends",
            Command::Compare(_) => "compare",
            Command::Simulate(_) => "simulate",
            Command::Sde(_) => "sde",
            Command::Rerun(_) => "rerun",
        }
    }
}

/// Flags shared by every experiment command.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated system sizes; overrides the scenario ladder.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    /// Replications per size.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "HWROUTE_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
    /// Exit with code 4 when the command's acceptance checks fail.
    #[arg(long)]
    #[serde(default)]
    pub assert: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Also write the resolved scenario and limit coefficients here.
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Probe time; defaults to the scenario's.
    #[arg(long)]
    pub t_probe: Option<f64>,
    /// Also export the first replication at each size on this time grid.
    #[arg(long)]
    pub thin_grid: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrendsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sizes for the concentration bounds (accepts 1e6 notation).
    #[arg(long, value_delimiter = ',', default_value = "1e4,1e6,1e8")]
    pub bound_sizes: Vec<f64>,
    /// Largest size at which the concentration events are also simulated.
    #[arg(long, default_value_t = 1e6)]
    pub mc_max: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated policies; defaults to the scenario's list.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyKind>>,
    /// System size; defaults to the largest ladder entry.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t_probe: Option<f64>,
    /// Replications per policy that are fully recorded and audited.
    #[arg(long, default_value_t = 10)]
    pub dominance_reps: usize,
    #[arg(long)]
    pub thin_grid: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "PI0")]
    pub policy: PolicyKind,
    /// System size; defaults to the largest ladder entry.
    #[arg(long)]
    pub n: Option<usize>,
    /// Replication index.
    #[arg(long, default_value_t = 0)]
    pub rep: usize,
    /// Record on this time grid instead of every event.
    #[arg(long)]
    pub thin_grid: Option<f64>,
    /// Write the fixed-width binary path format instead of CSV.
    #[arg(long)]
    #[serde(default)]
    pub binary: bool,
    /// Also write the per-job log.
    #[arg(long)]
    #[serde(default)]
    pub job_log: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SdeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub t_probe: Option<f64>,
    /// Number of terminal values; defaults to the scenario's.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Euler step; defaults to the scenario's.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}
