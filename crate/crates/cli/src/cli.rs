//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use parascan_core::kalman_par::Method;
use parascan_core::scan::{ScanAlgorithm, DEFAULT_SENGUPTA_N};

use crate::config::{BenchConfig, Precision, DEFAULT_SIM_THREADS};
use crate::error::BenchError;
use crate::rows::{write_csv_atomic, write_rows, ResultRow};
use crate::suite::{gate_failures, run_suite, speedup_rows, Parts};
use crate::timing::Clock;

#[derive(Debug, Parser)]
#[command(name = "bench", version, about = "Parallel Kalman filter and smoother benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wall-clock, simulated cost and accuracy for every cell of the grid.
    Run(Opts),
    /// Accuracy against the sequential oracles; exits 1 above tolerance.
    Verify(Opts),
    /// Simulated time, work and launch counts only.
    Simulate(Opts),
    /// Sequential over parallel filter time, measured and simulated.
    Speedup(Opts),
}

#[derive(Debug, Args)]
struct Opts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    nx: usize,
    #[arg(long, default_value_t = 2)]
    ny: usize,
    /// Series lengths, comma separated.
    #[arg(long = "T", value_delimiter = ',', default_value = "1024")]
    t: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "PKF,PRTS,PTFS")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "hillis-steele,blelloch,inplace-lafi,sengupta-a,sengupta-b")]
    algs: Vec<String>,
    #[arg(long, default_value = "f32")]
    precision: String,
    #[arg(long, default_value_t = 12)]
    runs: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    /// Pooled workers per device [default: available parallelism].
    #[arg(long, env = "PARASCAN_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value_t = 1)]
    devices: usize,
    #[arg(long = "sengupta-n", default_value_t = DEFAULT_SENGUPTA_N)]
    sengupta_n: usize,
    /// Simulated threads per device.
    #[arg(long = "sim-threads", default_value_t = DEFAULT_SIM_THREADS)]
    sim_threads: usize,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 when an accuracy row exceeds its tolerance.
    #[arg(long)]
    gate: bool,
}

impl Opts {
    fn config(&self) -> Result<BenchConfig, BenchError> {
        let usage = |e: parascan_core::error::Error| BenchError::Usage(e.to_string());
        let methods = self.methods.iter().map(|m| m.parse::<Method>().map_err(usage)).collect::<Result<_, _>>()?;
        let algs = self
            .algs
            .iter()
            .map(|a| ScanAlgorithm::parse(a, self.sengupta_n).map_err(usage))
            .collect::<Result<_, _>>()?;
        let defaults = BenchConfig::default();
        let cfg = BenchConfig {
            seed: self.seed,
            nx: self.nx,
            ny: self.ny,
            t_grid: self.t.clone(),
            methods,
            algs,
            precision: self.precision.parse::<Precision>()?,
            runs: self.runs,
            warmup: self.warmup,
            threads: self.threads.unwrap_or(defaults.threads),
            devices: self.devices,
            sengupta_n: self.sengupta_n,
            sim_threads: self.sim_threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(rows: &[ResultRow], out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), BenchError> {
    match out {
        Some(path) => write_csv_atomic(path, rows),
        None => write_rows(stdout, rows),
    }
}

fn execute(command: Command, clock: &dyn Clock, stdout: &mut dyn Write) -> Result<u8, BenchError> {
    let (opts, rows, gate) = match command {
        Command::Run(o) => {
            let rows = run_suite(&o.config()?, Parts::ALL, clock)?;
            let gate = o.gate;
            (o, rows, gate)
        }
        Command::Verify(o) => {
            let rows = run_suite(&o.config()?, Parts::ACCURACY, clock)?;
            (o, rows, true)
        }
        Command::Simulate(o) => {
            let rows = run_suite(&o.config()?, Parts::SIMULATED, clock)?;
            (o, rows, false)
        }
        Command::Speedup(o) => {
            let rows = speedup_rows(&o.config()?, clock)?;
            (o, rows, false)
        }
    };
    emit(&rows, &opts.out, stdout)?;
    let failures = if gate { gate_failures(&rows) } else { Vec::new() };
    for r in &failures {
        eprintln!("tolerance exceeded: {} {} T={} {}: {}", r.method, r.alg, r.t, r.precision, r.value);
    }
    Ok(if failures.is_empty() { 0 } else { 1 })
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, clock: &dyn Clock, stdout: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, clock, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bench: {e}");
            e.exit_code()
        }
    }
}
