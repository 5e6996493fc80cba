use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nbcombine::config::GridConfig;
use nbcombine::copulas::{CopulaFamily, CopulaSpec};
use nbcombine::datagen::{generate_dataset, DatasetSpec};
use nbcombine::harness::{run_grid, Protocol, RejectionReport};
use nbcombine::output::{format_significant, write_csv, write_json, TableHeader};
use nbcombine::{Method, NegBinParams, PValueVector};

#[derive(Parser)]
#[command(
    name = "nbcombine",
    version,
    about = "P-value combination tests on negative binomial count data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate type-1 error rates over a grid of null configurations.
    Type1(RunArgs),
    /// Estimate power over a grid of sample sizes under a sparse alternative.
    Power(RunArgs),
    /// Combine p-values given inline or in a file.
    Combine(CombineArgs),
    /// Generate one dataset and dump it as tab-separated counts.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = default_parallelism())]
    parallelism: usize,
    /// Replaces the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct CombineArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Comma-separated weights (CCT only); must be positive and sum to one.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Read whitespace- or comma-separated p-values from this file.
    #[arg(long, conflicts_with = "pvalues")]
    file: Option<PathBuf>,
    pvalues: Vec<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_parser = parse_family, default_value = "independence")]
    family: CopulaFamily,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    r: u32,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    overwrite: bool,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: nbcombine::Error| e.to_string())
}

fn parse_family(s: &str) -> Result<CopulaFamily, String> {
    s.parse().map_err(|e: nbcombine::Error| e.to_string())
}

/// Exit 2: bad input or configuration. Exit 1: failure while running.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Type1(args) => cmd_run(Protocol::Type1, &args),
        Command::Power(args) => cmd_run(Protocol::Power, &args),
        Command::Combine(args) => cmd_combine(&args),
        Command::Sample(args) => cmd_sample(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(protocol: Protocol, args: &RunArgs) -> Result<(), Failure> {
    let source = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.config.display())))?;
    let anchored = |e: nbcombine::config::ConfigError| match e.line {
        Some(line) => Failure::Usage(format!("{}:{line}: {}", args.config.display(), e.message)),
        None => Failure::Usage(format!("{}: {}", args.config.display(), e.message)),
    };
    let mut grid = GridConfig::parse(&source).map_err(anchored)?;
    if let Some(seed) = args.seed {
        *grid.seed.get_mut() = seed;
    }
    let cells = grid.expand(protocol, &source).map_err(anchored)?;

    let extension = match args.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = args.out.join(format!("{}.{extension}", grid.name()));
    check_writable(&path, args.overwrite)?;
    fs::create_dir_all(&args.out)?;

    let configs: Vec<_> = cells.into_iter().map(|c| c.config).collect();
    let results = run_grid(protocol, &configs, args.parallelism)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut reports: Vec<RejectionReport> = Vec::with_capacity(results.len());
    let mut failed = 0;
    for (config, result) in configs.iter().zip(results) {
        match result {
            Ok(report) => reports.push(report),
            Err(e) => {
                failed += 1;
                eprintln!("cell {} failed: {e}", config.id);
            }
        }
    }

    let header = TableHeader {
        experiment: grid.name().to_string(),
        target: grid.target.clone(),
        protocol: protocol.to_string(),
    };
    let file = BufWriter::new(File::create(&path)?);
    match args.format {
        Format::Csv => write_csv(file, &header, &reports)?,
        Format::Json => write_json(file, &header, &reports)?,
    }
    eprintln!("wrote {} ({} cells)", path.display(), reports.len());
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} cell(s) failed")));
    }
    Ok(())
}

fn check_writable(path: &Path, overwrite: bool) -> Result<(), Failure> {
    if path.exists() && !overwrite {
        return Err(Failure::Usage(format!(
            "{} already exists; pass --overwrite to replace it",
            path.display()
        )));
    }
    Ok(())
}

fn cmd_combine(args: &CombineArgs) -> Result<(), Failure> {
    let pvalues = match &args.file {
        Some(path) => {
            let mut text = String::new();
            File::open(path)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            text.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        Failure::Usage(format!("{}: '{t}' is not a number", path.display()))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => args.pvalues.clone(),
    };
    let pv = match &args.weights {
        Some(w) => PValueVector::with_weights(pvalues, w.clone()),
        None => PValueVector::new(pvalues),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let result = args.method.combine(&pv);
    let mut out = io::stdout().lock();
    writeln!(out, "method = {}", result.method)?;
    writeln!(
        out,
        "statistic = {}",
        format_significant(result.statistic, 6)
    )?;
    writeln!(out, "p = {}", format_significant(result.pvalue, 6))?;
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> Result<(), Failure> {
    let usage = |e: nbcombine::Error| Failure::Usage(e.to_string());
    let law = NegBinParams::new(args.r, args.p).map_err(usage)?;
    let copula = match args.family {
        CopulaFamily::Independence => None,
        family => {
            let theta = args.theta.ok_or_else(|| {
                Failure::Usage(format!("--theta is required for the {family} copula"))
            })?;
            Some(CopulaSpec::new(family, theta, args.m).map_err(usage)?)
        }
    };
    let spec = DatasetSpec::new(vec![law; args.m], copula, args.n).map_err(usage)?;
    let data = generate_dataset(&spec, &mut ChaCha8Rng::seed_from_u64(args.seed));
    match &args.out {
        Some(path) => {
            check_writable(path, args.overwrite)?;
            data.write_tsv(BufWriter::new(File::create(path)?))?;
        }
        None => data.write_tsv(BufWriter::new(io::stdout().lock()))?,
    }
    Ok(())
}
