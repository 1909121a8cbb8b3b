//! `tloops`: check, evaluate, generate code for and benchmark `.tl` programs.
//!
//! Exit status is 0 on success, 1 for diagnostics (program or data errors) and
//! 2 when a file cannot be read or written.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tloops::bench::{self, BenchCase, BenchMode, MonotonicClock};
use tloops::codewriter::{Backend, Registry, WriteError, MANIFEST_FILE};
use tloops::eval::{eval_with, Mode};
use tloops::parse::{Diagnostic, Program};
use tloops::tldf::{self, TldfError};
use tloops::{parse_program, CheckedStatement};

#[derive(Parser)]
#[command(name = "tloops", version, about = "Symmetry-aware tensor-loop compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program.
    Check { file: PathBuf },
    /// Run a program over the fields in a TLDF file.
    Eval {
        file: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Evaluate one left-hand component at a time.
        #[arg(long)]
        per_component: bool,
    },
    /// Emit dispatch, bindings and kernel sources.
    Codegen {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "c")]
        backend: BackendArg,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Measure effective bandwidth.
    Bench {
        /// Benchmark the built-in suite (the default).
        #[arg(long, conflicts_with = "file")]
        suite: bool,
        /// Benchmark every statement of this program instead.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Comma-separated ascending gridsizes, each a multiple of 32.
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Print rows as JSON on standard output.
        #[arg(long)]
        json: bool,
        /// `per-component` adds per-component rows next to the whole-tensor ones.
        #[arg(long, value_enum, default_value = "whole-tensor")]
        mode: ModeArg,
        #[arg(long, default_value_t = bench::DEFAULT_REPS)]
        reps: usize,
        #[arg(long, default_value_t = bench::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    C,
    Cuda,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    WholeTensor,
    PerComponent,
}

/// Why a command failed; the variant picks the exit status.
enum Failure {
    Diagnostics(Vec<String>),
    Io(String),
}

impl Failure {
    fn one(msg: impl Into<String>) -> Self {
        Failure::Diagnostics(vec![msg.into()])
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(lines)) => {
            for l in lines {
                eprintln!("{l}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check { file } => {
            load(&file)?;
            Ok(())
        }
        Command::Eval {
            file,
            data,
            out,
            per_component,
        } => eval(&file, &data, &out, per_component),
        Command::Codegen {
            file,
            backend,
            out_dir,
        } => codegen(&file, backend, &out_dir),
        Command::Bench {
            suite: _,
            file,
            grids,
            csv,
            json,
            mode,
            reps,
            seed,
        } => {
            let cases = match &file {
                Some(f) => {
                    let (program, _) = load(f)?;
                    let stem = f.file_stem().map_or("program".into(), |s| s.to_string_lossy());
                    bench::program_cases(&stem, &program).map_err(|d| render(f, &d))?
                }
                None => bench::builtin_suite().iter().map(|e| e.case()).collect(),
            };
            let grids = grids.unwrap_or_else(|| bench::DEFAULT_GRIDS.to_vec());
            let modes = match mode {
                ModeArg::WholeTensor => vec![BenchMode::WholeTensor],
                ModeArg::PerComponent => vec![BenchMode::WholeTensor, BenchMode::PerComponent],
            };
            bench_cmd(&cases, &grids, &modes, reps, seed, csv.as_deref(), json)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn render(path: &Path, diags: &[Diagnostic]) -> Failure {
    let name = path.display().to_string();
    Failure::Diagnostics(diags.iter().map(|d| d.render(&name)).collect())
}

/// Parses and validates a file.
fn load(path: &Path) -> Result<(Program, Vec<CheckedStatement>), Failure> {
    let text = read_text(path)?;
    let program = parse_program(&text).map_err(|d| render(path, &d))?;
    let checked = program.check().map_err(|d| render(path, &d))?;
    Ok((program, checked))
}

fn tldf_failure(e: TldfError) -> Failure {
    Failure::Io(e.to_string())
}

fn eval(file: &Path, data: &Path, out: &Path, per_component: bool) -> Result<(), Failure> {
    let (program, checked) = load(file)?;
    let mut env = tldf::read(data).map_err(|e| match e {
        TldfError::Io { .. } => tldf_failure(e),
        other => Failure::Io(format!("{}: {other}", data.display())),
    })?;
    let mode = if per_component { Mode::PerComponent } else { Mode::WholeTensor };
    let name = file.display().to_string();
    for (stmt, c) in program.statements.iter().zip(&checked) {
        eval_with(&mut env, c, mode, false).map_err(|e| Failure::one(Diagnostic::new(stmt.pos, e.to_string()).render(&name)))?;
    }
    tldf::write(out, &env).map_err(tldf_failure)
}

fn codegen(file: &Path, backend: BackendArg, out_dir: &Path) -> Result<(), Failure> {
    let (_, checked) = load(file)?;
    let mut registry = Registry::new();
    for c in &checked {
        registry.register(c);
    }
    let backend = match backend {
        BackendArg::C => Backend::C,
        BackendArg::Cuda => Backend::Cuda,
        BackendArg::Both => Backend::Both,
    };
    match registry.write_all(out_dir, backend) {
        Ok(_) => {
            println!("{}", out_dir.join(MANIFEST_FILE).display());
            Ok(())
        }
        Err(WriteError::Empty) => Err(Failure::one(format!("{}: nothing to generate", file.display()))),
        Err(e @ WriteError::Io { .. }) => Err(Failure::Io(e.to_string())),
    }
}

fn bench_cmd(
    cases: &[BenchCase],
    grids: &[usize],
    modes: &[BenchMode],
    reps: usize,
    seed: u64,
    csv: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    bench::check_grids(grids).map_err(|e| Failure::one(e.to_string()))?;
    let mut clock = MonotonicClock::default();
    let rows = bench::sweep(cases, grids, modes, reps, seed, &mut clock).map_err(|e| Failure::one(e.to_string()))?;
    let io_err = |path: &str, e: &dyn std::fmt::Display| Failure::Io(format!("{path}: {e}"));
    match csv {
        Some(path) => {
            let f = fs::File::create(path).map_err(|e| io_err(&path.display().to_string(), &e))?;
            bench::write_csv(&rows, io::BufWriter::new(f)).map_err(|e| io_err(&path.display().to_string(), &e))?;
        }
        None if !json => bench::write_csv(&rows, io::stdout().lock()).map_err(|e| io_err("stdout", &e))?,
        None => {}
    }
    if json {
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, &rows).map_err(|e| io_err("stdout", &e))?;
        writeln!(out).map_err(|e| io_err("stdout", &e))?;
    }
    Ok(())
}
