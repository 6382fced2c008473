use clap::{Parser, ValueEnum};
use mmot::cli::{run_cli, Overrides, Task};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Solve,
    Dual,
    Verify,
    Campaign,
    Continuity,
}

impl From<TaskArg> for Task {
    fn from(value: TaskArg) -> Self {
        match value {
            TaskArg::Solve => Task::Solve,
            TaskArg::Dual => Task::Dual,
            TaskArg::Verify => Task::Verify,
            TaskArg::Campaign => Task::Campaign,
            TaskArg::Continuity => Task::Continuity,
        }
    }
}

/// Multimarginal optimal transport with repulsive costs: solvers,
/// Kantorovich potentials, and a verification harness.
#[derive(Parser)]
#[command(name = "mmot", version)]
struct Cli {
    /// Pipeline to run (overrides the config's `task` field).
    #[arg(value_enum)]
    task: TaskArg,
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `outputs.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator seed (overrides `measures.generator.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Variable budget for exact solves (overrides `solver.budget`).
    #[arg(long)]
    budget: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let overrides = Overrides {
        task: Some(cli.task.into()),
        out: cli.out,
        seed: cli.seed,
        budget: cli.budget,
    };
    std::process::exit(run_cli(&cli.config, &overrides));
}
