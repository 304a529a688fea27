use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tcbench", version, about = "Benchmark ramp-metering and signal controllers under stochastic demand")]
pub struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Treat degenerate statistical input as a failure (exit 3).
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestArg {
    PairedT,
    Wilcoxon,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One seeded run with traces, CSVs and plots.
    Simulate {
        config: PathBuf,
        /// Defaults to the first seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search over controller parameters.
    Calibrate {
        config: PathBuf,
        /// e.g. `K_P=5:50:5` or `K_P=10,20;K_I=0,-5`.
        #[arg(long)]
        grid: String,
        /// A count (`20`) or an explicit list (`1,2,3`).
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired comparison of two configurations on identical seeds, or a
    /// two-sample t-test from summary statistics.
    Compare {
        #[arg(required_unless_present = "summary_stats")]
        config_a: Option<PathBuf>,
        #[arg(required_unless_present = "summary_stats")]
        config_b: Option<PathBuf>,
        /// Two `mean,sd,n` triples.
        #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with_all = ["config_a", "config_b"])]
        summary_stats: Option<Vec<String>>,
        #[arg(long)]
        seeds: Option<String>,
        /// Metric to compare; `objective` is the weighted objective.
        #[arg(long, default_value = "objective")]
        metric: String,
        #[arg(long, value_enum, default_value_t = TestArg::PairedT)]
        test: TestArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise run CSVs written by `calibrate` per configuration.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "objective")]
        metric: String,
    },
}
