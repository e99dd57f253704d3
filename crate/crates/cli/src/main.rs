use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sosmm::commands::{run, Command, Figure, Format, RunConfig};

#[derive(Parser)]
#[command(name = "sosmm", version, about = "Min-max polynomial optimization with sum-of-squares relaxations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Seed for point sampling (overrides the problem file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hierarchy level on X.
    #[arg(long, global = true)]
    hierarchy_x: Option<u32>,
    /// Hierarchy level on Y.
    #[arg(long, global = true)]
    hierarchy_y: Option<u32>,
    /// Oracle grid size per coordinate.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Fmt::Json)]
    format: Fmt,
    /// Levels for two-stage, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    /// Iterations for alternate.
    #[arg(long, global = true)]
    iters: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize one function over a set.
    SolveMin { input: PathBuf },
    /// One-stage relaxation of min_x max_y g(x, y).
    SolveMinmax { input: PathBuf },
    /// Two-stage upper bound.
    TwoStage { input: PathBuf },
    /// Alternating two-stage.
    Alternate { input: PathBuf },
    /// Certificate that {x in ball : g_j(x) >= 0 for all j} is empty.
    Certify { input: PathBuf },
    /// Check the matrix Fejér bound table and, optionally, a matrix polynomial.
    VerifyMatrixSos { input: Option<PathBuf> },
    /// Check a problem file without solving.
    Validate { input: PathBuf },
    /// Run the command named in the input file's "command" field.
    Run { input: PathBuf },
    /// Regenerate one of the bundled experiments.
    Repro { figure: Fig },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fig {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, input) = match cli.command {
        Cmd::SolveMin { input } => (Command::SolveMin, Some(input)),
        Cmd::SolveMinmax { input } => (Command::SolveMinmax, Some(input)),
        Cmd::TwoStage { input } => (Command::TwoStage, Some(input)),
        Cmd::Alternate { input } => (Command::Alternate, Some(input)),
        Cmd::Certify { input } => (Command::Certify, Some(input)),
        Cmd::VerifyMatrixSos { input } => (Command::VerifyMatrixSos, input),
        Cmd::Validate { input } => (Command::Validate, Some(input)),
        Cmd::Run { input } => (Command::Run, Some(input)),
        Cmd::Repro { figure } => {
            let f = match figure {
                Fig::Fig1 => Figure::Fig1,
                Fig::Fig2 => Figure::Fig2,
                Fig::Fig3 => Figure::Fig3,
                Fig::Fig4 => Figure::Fig4,
                Fig::Fig5 => Figure::Fig5,
            };
            (Command::Repro(f), None)
        }
    };
    let cfg = RunConfig {
        command,
        input,
        seed: cli.seed,
        hierarchy_x: cli.hierarchy_x,
        hierarchy_y: cli.hierarchy_y,
        grid: cli.grid,
        out: cli.out,
        format: match cli.format {
            Fmt::Json => Format::Json,
            Fmt::Csv => Format::Csv,
        },
        levels: cli.levels,
        iters: cli.iters,
    };
    let report = run(&cfg);
    let text = serde_json::to_string_pretty(&report.result).expect("serializable");
    if report.exit_code == 1 {
        eprintln!("{text}");
    } else {
        match (cfg.format, report.tables.first()) {
            (Format::Csv, Some((_, t))) => print!("{}", t.to_csv()),
            _ => println!("{text}"),
        }
    }
    ExitCode::from(report.exit_code as u8)
}
