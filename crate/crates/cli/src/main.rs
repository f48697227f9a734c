//! `statanon` command-line interface.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "statanon", version, about = "Exposure metrics, composition bounds and protocol simulation for statistical k-anonymity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// CSV file to read.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON table schema; without one every column is read with an inferred alphabet.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Comma-separated column names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    /// Probability thresholds, comma-separated (`0.1`, `1/8`, ...).
    #[arg(long = "t", value_delimiter = ',', conflicts_with = "k")]
    pub t: Vec<String>,
    /// Anonymity levels, comma-separated; each becomes the threshold k/n.
    #[arg(short = 'k', long = "k", value_delimiter = ',')]
    pub k: Vec<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-column and joint exposure curves with the best composed bound.
    Analyze {
        #[command(flatten)]
        table: TableArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the two-round protocol described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's budget.
        #[arg(long)]
        budget: Option<f64>,
        /// Statistical setting: run this many consecutive seeds and write a coverage summary.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Spread of the plug-in exposure and statistical-exposure estimators.
    Fig3 {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 128)]
        n_users: u64,
        /// Comma-separated probabilities, or `uniform:M`.
        #[arg(long, default_value = "0.4,0.3,0.2,0.1")]
        dist: String,
        #[arg(long, default_value_t = 2)]
        k_min: u64,
        #[arg(long, default_value_t = 64)]
        k_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Composition certificates for a column set.
    Bounds {
        #[command(flatten)]
        table: TableArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// `best` searches both rules; `support` and `general` apply one
        /// rule at the per-column thresholds given by `--column-t`.
        #[arg(long, value_enum, default_value_t = RuleArg::Best)]
        rule: RuleArg,
        /// Per-column thresholds for `support` and `general`.
        #[arg(long, value_delimiter = ',')]
        column_t: Vec<String>,
        /// Free parameter of the general rule.
        #[arg(long)]
        c: Option<String>,
        /// Column whose slack the support rule drops (default: largest slack).
        #[arg(long)]
        j_star: Option<usize>,
        /// Also report whether the bound stays below this value.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Emit the pair of distributions that are hard to tell apart from n samples.
    Lecam {
        #[arg(long)]
        s: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Best,
    Support,
    General,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Analyze {
            table,
            thresholds,
            out_dir,
            format,
        } => commands::analyze(&table, &thresholds, &out_dir, format),
        Command::Simulate {
            config,
            seed,
            budget,
            runs,
            out_dir,
        } => commands::simulate(&config, seed, budget, runs, &out_dir),
        Command::Fig3 {
            trials,
            n_users,
            dist,
            k_min,
            k_max,
            seed,
            out_dir,
            format,
        } => commands::fig3(trials, n_users, &dist, k_min, k_max, seed, &out_dir, format),
        Command::Bounds {
            table,
            thresholds,
            rule,
            column_t,
            c,
            j_star,
            budget,
            out_dir,
        } => commands::bounds(
            &table,
            &thresholds,
            rule,
            &column_t,
            c.as_deref(),
            j_star,
            budget,
            out_dir.as_deref(),
        ),
        Command::Lecam { s, n, format, out_dir } => commands::lecam(s, n, format, out_dir.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
