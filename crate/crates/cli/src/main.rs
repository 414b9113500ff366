use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bspre_core::codegen::{generate, GenParams};
use bspre_core::harness::{self, RunConfig};
use bspre_core::network::Depository;
use bspre_core::vm::{
    assemble, disassemble, execute, Codelet, FeatureVector, Outcome, Program, DEFAULT_FUEL,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "bspre",
    version,
    about = "Intrinsically rewarded concept-network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment.
    Run(RunArgs),
    /// Codelet tooling.
    #[command(subcommand)]
    Codelet(CodeletCommand),
    /// Print a summary of a snapshot.
    Inspect { snapshot: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ticks: Option<u64>,
    /// letters or pixels.
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long)]
    snapshot_out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum CodeletCommand {
    /// Print the assembly of a generated codelet.
    Gen(GenArgs),
    /// Run a codelet on input vectors, one `--input` per slot.
    Exec {
        file: PathBuf,
        /// Comma-separated elements, e.g. "1,2,3".
        #[arg(long, required = true)]
        input: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u32,
    },
    /// Report validation violations, or "ok".
    Validate { file: Option<PathBuf> },
    /// Assembly to binary.
    Asm {
        file: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Binary to assembly.
    Disasm { file: Option<PathBuf> },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    min_len: usize,
    #[arg(long, default_value_t = 16)]
    max_len: usize,
    #[arg(long, default_value_t = 1)]
    arity: u8,
    #[arg(long, default_value_t = 8)]
    index_range: u8,
    #[arg(long, default_value_t = -32, allow_hyphen_values = true)]
    imm_min: i16,
    #[arg(long, default_value_t = 32, allow_hyphen_values = true)]
    imm_max: i16,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn input_err(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

fn runtime_err(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_source(file: Option<&Path>) -> Result<Vec<u8>, CliError> {
    match file {
        Some(p) if p != Path::new("-") => {
            std::fs::read(p).map_err(|e| input_err(format!("{}: {e}", p.display())))
        }
        _ => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(input_err)?;
            Ok(buf)
        }
    }
}

/// Binary if it decodes as one, else assembly.
fn load_program(file: Option<&Path>) -> Result<Program, CliError> {
    let bytes = read_source(file)?;
    if let Ok(p) = Program::from_bytes(&bytes) {
        return Ok(p);
    }
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| input_err("input is neither a codelet binary nor text"))?;
    assemble(text).map_err(input_err)
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(runtime_err)
}

fn parse_vector(s: &str) -> Result<FeatureVector, CliError> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let elems: Vec<i16> = inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| input_err(format!("bad vector element `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    FeatureVector::new(elems).map_err(input_err)
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path).map_err(input_err)?;
    }
    cfg.apply_env_vars(std::env::vars()).map_err(input_err)?;
    let flags = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("ticks", args.ticks.map(|v| v.to_string())),
        ("env", args.env),
        (
            "metrics_out",
            args.metrics_out.map(|p| p.display().to_string()),
        ),
        (
            "snapshot_out",
            args.snapshot_out.map(|p| p.display().to_string()),
        ),
        ("workers", args.workers.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v).map_err(input_err)?;
        }
    }
    cfg.check().map_err(input_err)?;
    let summary = harness::run(&cfg).map_err(|e| {
        if e.is_config() {
            input_err(e)
        } else {
            runtime_err(e)
        }
    })?;
    println!("{summary}");
    Ok(())
}

fn codelet(cmd: CodeletCommand) -> Result<(), CliError> {
    match cmd {
        CodeletCommand::Gen(a) => {
            let params = GenParams {
                min_len: a.min_len,
                max_len: a.max_len,
                arity: a.arity,
                index_range: a.index_range,
                imm_min: a.imm_min,
                imm_max: a.imm_max,
                ..GenParams::default()
            };
            let c = generate(&params, &mut ChaCha8Rng::seed_from_u64(a.seed)).map_err(input_err)?;
            write_stdout(c.disassemble().as_bytes())
        }
        CodeletCommand::Exec { file, input, fuel } => {
            let c = Codelet::new(load_program(Some(&file))?).map_err(input_err)?;
            let inputs: Vec<FeatureVector> = input
                .iter()
                .map(|s| parse_vector(s))
                .collect::<Result<_, _>>()?;
            let out = execute(&c, &inputs, fuel).map_err(input_err)?;
            let line = match out.outcome {
                Outcome::Positive(v) => format!("Positive {v} steps={}", out.steps_used),
                Outcome::Negative => format!("Negative steps={}", out.steps_used),
                Outcome::FuelExhausted => format!("FuelExhausted steps={}", out.steps_used),
            };
            println!("{line}");
            Ok(())
        }
        CodeletCommand::Validate { file } => {
            let violations = load_program(file.as_deref())?.validate();
            if violations.is_empty() {
                println!("ok");
            }
            for v in violations {
                println!("{v}");
            }
            Ok(())
        }
        CodeletCommand::Asm { file, output } => {
            let bytes = load_program(file.as_deref())?.to_bytes();
            match output {
                Some(p) => std::fs::write(&p, bytes)
                    .map_err(|e| runtime_err(format!("{}: {e}", p.display()))),
                None => write_stdout(&bytes),
            }
        }
        CodeletCommand::Disasm { file } => {
            write_stdout(disassemble(&load_program(file.as_deref())?).as_bytes())
        }
    }
}

fn inspect(path: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let dep = Depository::restore(&bytes).map_err(input_err)?;
    write_stdout(harness::inspect(&dep).as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Codelet(cmd) => codelet(cmd),
        Command::Inspect { snapshot } => inspect(&snapshot),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bspre: {e}");
            ExitCode::from(e.code())
        }
    }
}
