//! Command-line surface. Exit codes are part of the contract:
//!
//! * 0 success
//! * 1 usage error (bad flags or flag values)
//! * 2 data or format error (missing, corrupt, or mismatched files)
//! * 3 numerical failure (SVD non-convergence, singular projection)
//!
//! All JSON goes to stdout with sorted keys; files are written via temp
//! file plus rename, so a failing command never leaves partial output.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rnnpress_core::compress::CompressError;
use rnnpress_core::inference::{compare, InferenceError, Sequence};
use rnnpress_core::model::{Architecture, CellType, Model, ModelError};
use rnnpress_core::{LinalgError, RankPolicy};
use rnnpress::container::{self, ContainerError};
use rnnpress::parallel::{compress_model_parallel, threads_from_env};
use rnnpress::report::{render, CompressionJson, MetricsJson, ModelJson, SpectraJson, SpectrumJson};
use rnnpress::seqfile::{self, SeqError};
use rnnpress::write_atomic;

#[derive(Parser)]
#[command(name = "rnnpress", version, about = "Low-rank compression toolkit for recurrent models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded random model container and print its parameter count
    Generate(GenerateArgs),
    /// Factor every layer of a dense model and write the result plus a report
    Compress(CompressArgs),
    /// Print a model's architecture as JSON
    Inspect(PathArg),
    /// Print each layer's recurrent singular values as JSON
    Spectra(PathArg),
    /// Print a model's parameter count
    Params(PathArg),
    /// Compare two models' outputs on shared input sequences
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CellArg {
    Lstm,
    Rnn,
}

impl From<CellArg> for CellType {
    fn from(c: CellArg) -> CellType {
        match c {
            CellArg::Lstm => CellType::Lstm,
            CellArg::Rnn => CellType::Rnn,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Cell type of every layer
    #[arg(long, value_enum)]
    cell: CellArg,
    /// Input feature dimension
    #[arg(long)]
    inputs: usize,
    /// Hidden sizes, outermost first, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    layers: Vec<usize>,
    /// Output (logit) dimension
    #[arg(long)]
    outputs: usize,
    /// PRNG seed; identical flags and seed give byte-identical files
    #[arg(long)]
    seed: u64,
    /// Container file to write
    #[arg(short = 'o', long)]
    output: PathBuf,
}

#[derive(Args)]
#[command(group(ArgGroup::new("policy").required(true)))]
struct CompressArgs {
    /// Dense model container to read
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Compressed container to write
    #[arg(short = 'o', long)]
    output: PathBuf,
    /// Keep the largest rank whose squared-energy share stays at or
    /// below this threshold, per layer; in (0, 1]
    #[arg(long, value_parser = parse_tau, group = "policy")]
    tau: Option<f64>,
    /// Explicit rank per layer, outermost first, comma separated
    #[arg(long, value_delimiter = ',', group = "policy")]
    ranks: Option<Vec<usize>>,
    /// Also write the JSON report here (it always goes to stdout)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PathArg {
    /// Model container to read
    path: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Reference model container
    reference: PathBuf,
    /// Candidate model container
    candidate: PathBuf,
    /// Number of random sequences to draw
    #[arg(long, default_value_t = 10, conflicts_with = "seq_file")]
    seqs: usize,
    /// Length of each random sequence
    #[arg(long, default_value_t = 50, conflicts_with = "seq_file")]
    len: usize,
    /// Seed for sequence i is this value plus i
    #[arg(long, default_value_t = 1, conflicts_with = "seq_file")]
    seed: u64,
    /// Read sequences from files instead of drawing them (repeatable)
    #[arg(long = "seq-file")]
    seq_file: Vec<PathBuf>,
}

fn parse_tau(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("energy threshold must be in (0, 1], got {v}"))
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Container(#[from] ContainerError),
    #[error("{0}")]
    Seq(#[from] SeqError),
    #[error("{0}")]
    Compress(#[from] CompressError),
    #[error("{0}")]
    Inference(#[from] InferenceError),
    /// Architecture errors coming straight from command flags.
    #[error("{0}")]
    Flags(ModelError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{var} must be a non-negative integer, got {value:?}")]
    ThreadsEnv { var: &'static str, value: String },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Flags(_) | CliError::ThreadsEnv { .. } => 1,
            CliError::Compress(e) => match e {
                CompressError::InvalidTau { .. } => 1,
                CompressError::Model(ModelError::RankCount { .. })
                | CompressError::Model(ModelError::RankRange { .. }) => 1,
                CompressError::Linalg(e) => linalg_code(e),
                CompressError::InvalidSpectrum { .. }
                | CompressError::DegenerateSpectrum => 3,
                _ => 2,
            },
            CliError::Inference(e) => match e {
                InferenceError::Linalg(e) => linalg_code(e),
                _ => 2,
            },
            CliError::Container(_) | CliError::Seq(_) | CliError::Io(_) => 2,
        }
    }
}

fn linalg_code(_: &LinalgError) -> i32 {
    3
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land here too; they are not failures.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Generate(args) => generate(args),
        Cmd::Compress(args) => compress(args),
        Cmd::Inspect(args) => {
            let model = container::load(&args.path)?;
            print!("{}", render(&ModelJson::new(&model)));
            Ok(())
        }
        Cmd::Spectra(args) => spectra(args),
        Cmd::Params(args) => {
            let model = container::load(&args.path)?;
            println!("{}", model.param_count());
            Ok(())
        }
        Cmd::Eval(args) => eval(args),
    }
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let arch = Architecture::new(args.cell.into(), args.inputs, args.layers, args.outputs)
        .map_err(CliError::Flags)?;
    let model = Model::generate_random(&arch, args.seed).map_err(CliError::Flags)?;
    container::save(&model, &args.output)?;
    println!("params: {}", model.param_count());
    Ok(())
}

fn compress(args: CompressArgs) -> Result<(), CliError> {
    let threads = threads_from_env()
        .map_err(|value| CliError::ThreadsEnv { var: rnnpress::parallel::THREADS_ENV, value })?;
    let policy = match (args.tau, args.ranks) {
        (Some(tau), None) => RankPolicy::Energy(tau),
        (None, Some(ranks)) => RankPolicy::Fixed(ranks),
        _ => unreachable!("clap group guarantees exactly one policy flag"),
    };
    let model = container::load(&args.input)?;
    let (compressed, report) = compress_model_parallel(&model, &policy, threads)?;
    container::save(&compressed, &args.output)?;
    let text = render(&CompressionJson::new(&report));
    if let Some(path) = &args.report {
        write_atomic(path, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

fn spectra(args: PathArg) -> Result<(), CliError> {
    let model = container::load(&args.path)?;
    let mut layers = Vec::with_capacity(model.layers.len());
    for (i, layer) in model.layers.iter().enumerate() {
        let sigma = rnnpress_core::compress::recurrent_spectrum(layer)
            .map_err(|e| CliError::Compress(CompressError::Linalg(e)))?;
        layers.push(SpectrumJson {
            layer: i + 1,
            hidden: layer.hidden_size(),
            sigma,
        });
    }
    print!("{}", render(&SpectraJson { layers }));
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let reference = container::load(&args.reference)?;
    let candidate = container::load(&args.candidate)?;
    let seqs: Vec<Sequence> = if args.seq_file.is_empty() {
        (0..args.seqs)
            .map(|i| {
                Sequence::generate_random(
                    reference.input_dim,
                    args.len,
                    args.seed.wrapping_add(i as u64),
                )
            })
            .collect::<Result<_, _>>()?
    } else {
        args.seq_file
            .iter()
            .map(|p| seqfile::load(p))
            .collect::<Result<_, _>>()?
    };
    let metrics = compare(&reference, &candidate, &seqs)?;
    print!("{}", render(&MetricsJson::new(&metrics)));
    Ok(())
}
