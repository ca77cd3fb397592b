//! Command-line front end: `airtime`, `run` and `sweep`.
//!
//! [`main_with_args`] does all the work and returns the process exit code,
//! so the binary is a one-liner and tests can drive it with in-memory
//! streams. Exit codes: 0 success, 1 simulation error, 2 usage or
//! configuration error.

pub mod grid;
pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::airtime::{RadioConfig, TimingProfile};
use crate::error::Error;
use crate::sim::{self, ScenarioConfig};

pub use grid::parse_grid;
pub use output::{read_rows, write_rows, write_trace, OutputRow, ParsedRow, Status, HEADER};
pub use scenario::{load_scenario, parse_scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SIMULATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lorawan-etc",
    version,
    about = "Event-triggered control over a LoRaWAN Class-A link"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print time on air, round trip time and blackout periods as one CSV row.
    Airtime(AirtimeArgs),
    /// Run one scenario and print its metrics as CSV.
    Run(RunArgs),
    /// Run a scenario over a parameter grid and write one CSV row per cell.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct AirtimeArgs {
    #[arg(long)]
    pub sf: u8,
    /// Application payload in bytes, excluding the 13 B header.
    #[arg(long)]
    pub payload: u32,
    #[arg(long, default_value_t = 125_000)]
    pub bw: u32,
    /// Coding rate offset: 1 means 4/5, 4 means 4/8.
    #[arg(long, default_value_t = 1)]
    pub cr: u8,
    #[arg(long, default_value_t = 0.01)]
    pub duty: f64,
    #[arg(long, default_value_t = 3)]
    pub channels: u32,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML scenario file.
    pub scenario: PathBuf,
    /// Also write the full trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML scenario file used as the base of every cell; defaults apply without one.
    pub scenario: Option<PathBuf>,
    /// Axes and values, e.g. "sf=7..12;payload=10,20,30,40,50;duration=1,5,10".
    #[arg(long, default_value = "")]
    pub grid: String,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Airtime(a) => cmd_airtime(&a, stdout),
        Command::Run(a) => cmd_run(&a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(&a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } => EXIT_USAGE,
        Error::Domain(_) | Error::NumericalBlowUp { .. } | Error::TimeRegression { .. } => {
            EXIT_SIMULATION
        }
    }
}

fn io_err(what: &Path, e: std::io::Error) -> Error {
    Error::Domain(format!("cannot write {}: {e}", what.display()))
}

pub const AIRTIME_HEADER: &str =
    "sf,payload_bytes,bandwidth_hz,code_rate_num,n_channels,duty_cycle,toa_ms,rtt_ms,bp_ms,bp_n_ms";

pub fn cmd_airtime(a: &AirtimeArgs, stdout: &mut dyn Write) -> Result<i32, Error> {
    let mut radio = RadioConfig::eu868(a.sf, a.payload)
        .with_channels(a.channels)
        .with_duty_cycle(a.duty);
    radio.bandwidth_hz = a.bw;
    radio.code_rate_num = a.cr;
    radio.low_dr_optimize = crate::airtime::default_low_dr_optimize(a.sf, a.bw);
    radio.validate()?;
    let t = TimingProfile::from_config(&radio)?;
    let out = format!(
        "{AIRTIME_HEADER}\n{},{},{},{},{},{:.4},{:.3},{:.3},{:.3},{:.3}\n",
        radio.spreading_factor,
        radio.payload_bytes,
        radio.bandwidth_hz,
        radio.code_rate_num,
        radio.n_channels,
        radio.duty_cycle,
        t.time_on_air.as_ms(),
        t.rtt.as_ms(),
        t.bp_single.as_ms(),
        t.bp_n.as_ms(),
    );
    stdout
        .write_all(out.as_bytes())
        .map_err(|e| io_err(Path::new("<stdout>"), e))?;
    Ok(EXIT_OK)
}

pub fn cmd_run(a: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Error> {
    let cfg = load_scenario(&a.scenario)?;
    let timing = cfg.timing()?;
    let (metrics, trace) = match sim::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return Ok(exit_code(&e));
        }
    };
    if let Some(path) = &a.trace {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        write_trace(BufWriter::new(file), &trace)?;
    }
    let row = OutputRow::new(&cfg, Some(&timing), Some(&metrics));
    write_rows(stdout, &[row])?;
    Ok(EXIT_OK)
}

/// Writes every cell, failed ones included; exits 1 if any cell failed.
pub fn cmd_sweep(
    a: &SweepArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Error> {
    let base = match &a.scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioConfig::default(),
    };
    let grid = parse_grid(&a.grid)?;
    let rows = sim::sweep(&base, &grid);
    let mut failed = 0;
    for row in &rows {
        if let Err(e) = &row.result {
            failed += 1;
            let c = &row.cell;
            let _ = writeln!(
                stderr,
                "cell sf={} payload={} channels={} duration={:?} failed: {e}",
                c.sf, c.payload_bytes, c.n_channels, c.disturbance_duration_s
            );
        }
    }
    let table: Vec<OutputRow> = rows.iter().map(OutputRow::from_sweep).collect();
    match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            write_rows(BufWriter::new(file), &table)?;
        }
        None => write_rows(stdout, &table)?,
    }
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_SIMULATION
    })
}
