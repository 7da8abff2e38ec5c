use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use horopoints_cli::config::ExperimentKind;
use horopoints_cli::run::{resolve_out_dir, summary};
use horopoints_cli::{load_config, plot, Format, HarnessError, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "horopoints", version, about = "Rational points on expanding horocycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write point sets
    Generate(RunArgs),
    /// Empirical averages against Haar expectations, with rate fits
    Equidist(RunArgs),
    /// Triple averages against normalized Kloosterman sums
    Kloosterman(RunArgs),
    /// Invariance of point sets under the times-p actions
    Invariance(RunArgs),
    /// Point-set sizes against the residue-count formula
    Cardinality(RunArgs),
    /// L2 norms of the prime-averaged discrepancy operator
    Discrepancy(RunArgs),
    /// Mass of the cusp region above height T
    CuspMass(RunArgs),
    /// Level projections computed by two routes
    Projection(RunArgs),
    /// Exact horocycle intersection witnesses
    Intersection(RunArgs),
    /// Full-family Weyl sums against their closed form
    Weyl(RunArgs),
    /// Toral correlations against a grid oracle
    Mixing(RunArgs),
    /// Log-log error plot of an equidist JSON payload
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config, then the environment
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct PlotArgs {
    /// Equidist JSON payload
    input: PathBuf,
    /// SVG destination; defaults to the input with an `.svg` extension
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, HarnessError> {
    let (kind, args) = match command {
        Command::Plot(p) => return plot_file(p),
        Command::Generate(a) => (ExperimentKind::Generate, a),
        Command::Equidist(a) => (ExperimentKind::Equidist, a),
        Command::Kloosterman(a) => (ExperimentKind::Kloosterman, a),
        Command::Invariance(a) => (ExperimentKind::Invariance, a),
        Command::Cardinality(a) => (ExperimentKind::Cardinality, a),
        Command::Discrepancy(a) => (ExperimentKind::Discrepancy, a),
        Command::CuspMass(a) => (ExperimentKind::CuspMass, a),
        Command::Projection(a) => (ExperimentKind::Projection, a),
        Command::Intersection(a) => (ExperimentKind::Intersection, a),
        Command::Weyl(a) => (ExperimentKind::Weyl, a),
        Command::Mixing(a) => (ExperimentKind::Mixing, a),
    };
    let cfg = load_config(&args.config)?;
    if cfg.experiment != kind {
        return Err(HarnessError::ConfigInvalid(format!(
            "config describes a {} experiment, not {}",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    if let Some(threads) = args.threads.or(cfg.threads) {
        set_threads(threads)?;
    }
    let out = resolve_out_dir(args.out, &cfg);
    let format = args.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    let manifest = horopoints_cli::run(&cfg, &out, format)?;
    print!("{}", summary(&manifest));
    Ok(manifest.passed_hard())
}

#[cfg(feature = "parallel")]
fn set_threads(threads: usize) -> Result<(), HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| HarnessError::ConfigInvalid(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_threads: usize) -> Result<(), HarnessError> {
    Ok(())
}

fn plot_file(args: PlotArgs) -> Result<bool, HarnessError> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| HarnessError::io(&args.input, e))?;
    let svg = plot::render_equidist(&text)?;
    let out = args.out.unwrap_or_else(|| args.input.with_extension("svg"));
    std::fs::write(&out, svg).map_err(|e| HarnessError::io(&out, e))?;
    println!("wrote {}", out.display());
    Ok(true)
}
