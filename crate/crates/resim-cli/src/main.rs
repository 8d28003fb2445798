//! `resim`: compare representation files, run configured benchmarks, render
//! saved reports, and generate synthetic suites.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use resim_core::harness::{self, BenchmarkReport, RunConfig};
use resim_core::io;
use resim_core::measures::{EvalContext, Registry};
use resim_core::synth::{self, SuiteKind};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_STRICT_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "resim", version, about = "Representation similarity measures and benchmark harness")]
struct Cli {
    /// Worker threads for benchmark runs (default: all cores). Results are
    /// identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two representation files with one measure.
    Measure(MeasureArgs),
    /// Run every test in a config file and write reports.
    Bench(BenchArgs),
    /// Re-render a saved report.json.
    Report(ReportArgs),
    /// Generate a synthetic suite with a ready-to-run config.
    Synth(SynthArgs),
}

#[derive(Args)]
struct MeasureArgs {
    /// Left representation (.npy or .csv).
    #[arg(long, required_unless_present = "list")]
    left: Option<PathBuf>,
    /// Right representation (.npy or .csv).
    #[arg(long, required_unless_present = "list")]
    right: Option<PathBuf>,
    /// Measure id; see `resim measure --list`.
    #[arg(long, required_unless_present = "list")]
    measure: Option<String>,
    /// Neighborhood size for k-NN measures.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Seed for the stochastic trace estimator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// List available measure ids and exit.
    #[arg(long, exclusive = true)]
    list: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write reports here instead of the config's out_dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Exit with status 3 if any cell failed.
    #[arg(long)]
    strict: bool,
    /// Skip printing the rank table.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json produced by `resim bench`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Args)]
struct SynthArgs {
    /// Suite to generate: groups, layers, or prediction.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Measure(args) => cmd_measure(args),
        Command::Bench(args) => cmd_bench(args, cli.jobs),
        Command::Report(args) => cmd_report(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn cmd_measure(args: MeasureArgs) -> anyhow::Result<u8> {
    let registry = Registry::standard();
    if args.list {
        for m in registry.measures() {
            println!("{:<10} {}", m.id, m.name);
        }
        return Ok(EXIT_OK);
    }
    let id = args.measure.as_deref().expect("required by clap");
    let measure = registry
        .get(id)
        .ok_or_else(|| anyhow!("unknown measure id '{id}' (try `resim measure --list`)"))?;
    let (left_path, right_path) =
        (args.left.expect("required by clap"), args.right.expect("required by clap"));
    let left =
        io::read_matrix(&left_path).with_context(|| format!("reading {}", left_path.display()))?;
    let right = io::read_matrix(&right_path)
        .with_context(|| format!("reading {}", right_path.display()))?;
    let ctx = EvalContext { seed: args.seed, knn_k: args.k, ..EvalContext::default() };
    // A failed measure is a first-class result, not a CLI error.
    match measure.evaluate(&left, &right, &ctx) {
        Ok(value) => println!("{value}"),
        Err(failure) => {
            println!("nan");
            eprintln!("{id}: {failure}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bench(args: BenchArgs, jobs: Option<usize>) -> anyhow::Result<u8> {
    let config = RunConfig::load(&args.config)?;
    let base_dir = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let report = harness::run(&config, &base_dir, jobs)?;

    let out_dir = args.out_dir.unwrap_or_else(|| {
        let configured = &config.run.out_dir;
        if configured.is_absolute() { configured.clone() } else { base_dir.join(configured) }
    });
    let written = harness::write_report(&report, &out_dir)
        .with_context(|| format!("writing reports to {}", out_dir.display()))?;

    if !args.quiet {
        print!("{}", harness::render_table(&report));
        for path in &written {
            eprintln!("wrote {}", path.display());
        }
    }
    let any_failed = report.cells.iter().any(|c| c.is_failed());
    if args.strict && any_failed {
        return Ok(EXIT_STRICT_FAILED);
    }
    Ok(EXIT_OK)
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let report: BenchmarkReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    match args.format {
        Format::Csv => print!("{}", harness::render_csv(&report)),
        Format::Table => print!("{}", harness::render_table(&report)),
    }
    Ok(EXIT_OK)
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<u8> {
    let kind: SuiteKind = args.suite.parse().map_err(|e: String| anyhow!(e))?;
    let manifest = synth::write_suite(kind, args.seed, &args.out)?;
    println!(
        "wrote {} representations to {} (config: {})",
        manifest.representations.len(),
        args.out.display(),
        args.out.join(&manifest.config).display()
    );
    Ok(EXIT_OK)
}
