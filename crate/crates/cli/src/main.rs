//! `iwg` command line: mesh-refinement studies on the benchmark problems.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iwg::assembly::{BoundaryData, PenaltyScaling, DEFAULT_RHO};
use iwg::geometry::MultipleCrossings;
use iwg::error_analysis::NormOptions;
use iwg::solver::{Method, SolverConfig};
use iwg::study::{run_study, OutputFormat, StudyConfig};

#[derive(Parser)]
#[command(name = "iwg", version, about = "Immersed weak Galerkin interface solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a benchmark problem on a ladder of meshes and print the error table.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Circle,
    Petal,
    Corner,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    /// Sparse Cholesky; fails on indefinite systems.
    Direct,
    /// Sparse LU.
    Lu,
    Cg,
    /// Cholesky (CG for large systems), LU if not positive definite.
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    /// rho / h
    Plain,
    /// rho * beta_T / h
    Coefficient,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    /// Mean of g over each boundary edge.
    Mean,
    /// g at the edge midpoint.
    Midpoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long)]
    beta_minus: f64,
    #[arg(long)]
    beta_plus: f64,
    /// Comma-separated N values, e.g. 16,32,64,128.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    /// Stabilizer weighting.
    #[arg(long, value_enum, default_value_t = ScalingArg::Coefficient)]
    penalty_scaling: ScalingArg,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Midpoint)]
    boundary_data: BoundaryArg,
    /// Fail on mesh edges the interface crosses more than once instead of
    /// classifying them by their end points.
    #[arg(long)]
    strict_crossings: bool,
    /// Corner half-angle in radians (corner problem only; default pi/6).
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    solver: SolverArg,
    /// Relative residual tolerance of the iterative solver.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write the finest level's u0 as a legacy VTK file.
    #[arg(long)]
    export_field: Option<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve the statically condensed edge system.
    #[arg(long)]
    condense: bool,
    /// Also report the energy norm (not part of the table).
    #[arg(long)]
    energy: bool,
}

fn run(args: RunArgs) -> iwg::Result<()> {
    let problem = match args.problem {
        ProblemArg::Circle => "circle",
        ProblemArg::Petal => "petal",
        ProblemArg::Corner => "corner",
    };
    let mut config = StudyConfig::new(problem, args.beta_minus, args.beta_plus, args.levels);
    config.rho = args.rho;
    config.penalty_scaling = match args.penalty_scaling {
        ScalingArg::Plain => PenaltyScaling::Plain,
        ScalingArg::Coefficient => PenaltyScaling::Coefficient,
    };
    config.boundary_data = match args.boundary_data {
        BoundaryArg::Mean => BoundaryData::EdgeMean,
        BoundaryArg::Midpoint => BoundaryData::Midpoint,
    };
    if args.strict_crossings {
        config.crossings = MultipleCrossings::Reject;
    }
    config.theta = args.theta;
    config.solver = SolverConfig {
        method: match args.solver {
            SolverArg::Direct => Method::Direct,
            SolverArg::Lu => Method::Lu,
            SolverArg::Cg => Method::Cg,
            SolverArg::Auto => Method::Auto,
        },
        tol: args.tol,
        ..SolverConfig::default()
    };
    config.format = match args.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Md => OutputFormat::Markdown,
    };
    config.export_field = args.export_field;
    config.condense = args.condense;
    if args.energy {
        config.norms = NormOptions {
            energy_penalty: Some(config.scheme()),
            ..NormOptions::default()
        };
    }
    let table = run_study(&config)?;
    let text = table.render(config.format);
    match args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    for row in &table.rows {
        if row.tolerated_edges > 0 {
            eprintln!(
                "warning: N={}: {} edge(s) crossed more than once by the interface, classified by end points",
                row.report.n_per_side, row.tolerated_edges
            );
        }
    }
    if args.energy {
        for row in &table.rows {
            if let Some(e) = row.report.energy {
                eprintln!("N={} energy={e:.3E}", row.report.n_per_side);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
