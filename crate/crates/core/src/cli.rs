//! Command-line front end: argument parsing into a [`RunPlan`] and its execution.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};

use crate::dump::DumpWriter;
use crate::error::{Error, Result};
use crate::integrators::IntegratorId;
use crate::params::SimParams;
use crate::scenario::{resolve_scenario, ScenarioSpec, BUILTINS};
use crate::service::{Server, ServerConfig};
use crate::session::{Session, SessionState};

const INTEGRATORS: [&str; 4] = ["euler", "midpoint", "feynman", "rk4"];

#[derive(Debug, Parser)]
#[command(name = "softbody", version, about = "Layered spring-mass-pressure softbody simulator")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Run a scenario headless for a fixed number of steps.
    Run(RunArgs),
    /// Continue a run from a snapshot file.
    Replay(ReplayArgs),
    /// Stream a live session to WebSocket or newline-delimited JSON clients.
    Serve(ServeArgs),
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunArgs {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: String,
    #[arg(long, value_parser = PossibleValuesParser::new(INTEGRATORS))]
    pub integrator: Option<String>,
    /// Fixed physics time step in seconds.
    #[arg(long, value_parser = parse_dt)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: u64,
    /// Particle CSV path; spring rows go to `<stem>.springs.csv` beside it.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Write the final state as a JSON snapshot.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long)]
    pub steps: u64,
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value = "jellyfish2d", value_parser = parse_scenario)]
    pub scenario: String,
    /// Maximum frames per second sent to clients.
    #[arg(long, default_value_t = 30.0, value_parser = parse_positive)]
    pub fps: f64,
    #[arg(long, value_parser = PossibleValuesParser::new(INTEGRATORS))]
    pub integrator: Option<String>,
    #[arg(long, value_parser = parse_dt)]
    pub dt: Option<f64>,
    /// Exit after this many physics steps.
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Step as fast as possible instead of in real time.
    #[arg(long)]
    pub fast: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunPlan {
    Run(RunArgs),
    Replay(ReplayArgs),
    Serve(ServeArgs),
    Scenarios,
}

fn parse_scenario(s: &str) -> std::result::Result<String, String> {
    resolve_scenario(s).map(|_| s.to_string()).map_err(|e| format!("{e}; built-in scenarios: {}", BUILTINS.join(", ")))
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn parse_dt(s: &str) -> std::result::Result<f64, String> {
    parse_positive(s)
}

/// Parses arguments (program name first). Usage errors carry exit code 2.
pub fn parse_cli<I, T>(argv: I) -> std::result::Result<RunPlan, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Ok(match Cli::try_parse_from(argv)?.command {
        CliCommand::Run(a) => RunPlan::Run(a),
        CliCommand::Replay(a) => RunPlan::Replay(a),
        CliCommand::Serve(a) => RunPlan::Serve(a),
        CliCommand::Scenarios => RunPlan::Scenarios,
    })
}

fn session_for(scenario: &str, integrator: Option<&str>, dt: Option<f64>) -> Result<Session> {
    let spec: ScenarioSpec = resolve_scenario(scenario)?;
    let mut params = spec.apply_overrides(&SimParams::default())?;
    if let Some(id) = integrator {
        params.integrator = id.parse::<IntegratorId>()?;
    }
    if let Some(dt) = dt {
        params.set("dt", dt)?;
    }
    spec.build(&params)
}

fn run_dumped(session: &mut Session, steps: u64, dump: Option<&Path>) -> Result<()> {
    let mut writer = match dump {
        Some(path) => Some(DumpWriter::create(path)?),
        None => None,
    };
    if let Some(w) = writer.as_mut() {
        w.dump_frame(session)?;
    }
    let outcome = session.run_with(steps, |s| match writer.as_mut() {
        Some(w) => w.dump_frame(s),
        None => Ok(()),
    });
    if let Some(w) = writer.as_mut() {
        w.flush()?;
    }
    outcome.map_err(|e| {
        log::error!("{e}");
        e.error
    })
}

fn write_snapshot(session: &Session, path: &Path) -> Result<()> {
    fs::write(path, session.snapshot().to_json()).map_err(|e| Error::DumpIo(format!("{}: {e}", path.display())))
}

fn summary(session: &Session, started: Instant, out: &mut impl Write) {
    let particles: usize = session.bodies.iter().map(|b| b.len()).sum();
    let _ = writeln!(
        out,
        "step {} t={:.4} s, {} bodies, {} particles, integrator {}, wall {:.3} s",
        session.clock.step,
        session.clock.t,
        session.bodies.len(),
        particles,
        session.params.integrator,
        started.elapsed().as_secs_f64()
    );
}

/// Carries out a plan, writing human-readable output to `out`.
pub fn execute(plan: RunPlan, out: &mut impl Write) -> Result<()> {
    match plan {
        RunPlan::Scenarios => {
            for name in BUILTINS {
                let _ = writeln!(out, "{name}");
            }
        }
        RunPlan::Run(a) => {
            let started = Instant::now();
            let mut session = session_for(&a.scenario, a.integrator.as_deref(), a.dt)?;
            run_dumped(&mut session, a.steps, a.dump.as_deref())?;
            if let Some(path) = &a.snapshot_out {
                write_snapshot(&session, path)?;
            }
            summary(&session, started, out);
        }
        RunPlan::Replay(a) => {
            let started = Instant::now();
            let text = fs::read_to_string(&a.from).map_err(|e| Error::CorruptSnapshot {
                path: String::new(),
                message: format!("{}: {e}", a.from.display()),
            })?;
            let mut session = Session::restore(SessionState::from_json(&text)?)?;
            run_dumped(&mut session, a.steps, a.dump.as_deref())?;
            summary(&session, started, out);
        }
        RunPlan::Serve(a) => {
            let session = session_for(&a.scenario, a.integrator.as_deref(), a.dt)?;
            let config = ServerConfig {
                fps: a.fps,
                realtime: !a.fast,
                max_steps: a.max_steps,
                dump: a.dump.clone(),
                ..ServerConfig::default()
            };
            let server = Server::bind((a.host.as_str(), a.port), session, config)
                .map_err(|e| Error::InvalidSpec(format!("cannot bind {}:{}: {e}", a.host, a.port)))?;
            let addr = server.local_addr().map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let _ = writeln!(out, "listening on {addr} (WebSocket or newline-delimited JSON)");
            let _ = out.flush();
            let session = server.run()?;
            summary(&session, Instant::now(), out);
        }
    }
    Ok(())
}

/// Entry point shared by the binary: parse, execute, map failures to exit codes.
pub fn main_with_args(argv: impl IntoIterator<Item = String>) -> ExitCode {
    let plan = match parse_cli(argv) {
        Ok(plan) => plan,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(plan, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
