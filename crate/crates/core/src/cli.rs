//! The `qtm` command line.
//!
//! Exit codes: 0 on success, 1 for bad input (flags, config, spec
//! validation, I/O), 2 when a numerical check or physical invariant fails.
//! Failures print one line `error[<kind>]: <reason>` on stderr.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::config::{load_config, Command, ConfigFile, OutputFormat, RunConfig, RunSpec};
use crate::engine::run_engine;
use crate::error::{Error, Result};
use crate::machine::MachineKind;
use crate::observables::{fridge_currents, fridge_currents_of_state};
use crate::output::{
    emit, engine_rows, matrix_to_rows, sweep_rows, CarnotOutput, CsvRow, CurrentsOutput, Document, SteadyStateOutput,
    TrajectoryOutput, TrajectorySample,
};
use crate::solvers::{evolve, oracle_crosscheck_with, solve_fridge, step_plan};
use crate::liouvillian::assemble_fridge_liouvillian;
use crate::selftest::run_selftest;
use crate::sweep::{carnot_check_engine, carnot_check_fridge, fridge_point, sweep_fridge, EngineCarnotInputs};

#[derive(Debug, Parser)]
#[command(name = "qtm", version, about = "Reset-model quantum absorption refrigerator and heat engine")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Optional when `--config` names the machine and command
    #[command(subcommand)]
    machine: Option<MachineCommand>,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum MachineCommand {
    /// Three-qubit absorption refrigerator
    Fridge {
        #[command(subcommand)]
        command: FridgeCommand,
    },
    /// Two-qubit heat engine lifting a weight
    Engine {
        #[command(subcommand)]
        command: EngineCommand,
    },
    /// Run every invariant suite on a seeded panel
    Selftest,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum FridgeCommand {
    /// Steady state and its currents
    Steady,
    /// Steady-state currents only
    Currents,
    /// Steady-state currents across a one-parameter grid
    Sweep,
    /// Design COP at the reversibility point against the Carnot COP
    CarnotCheck,
    /// Time evolution from the thermal product state
    Evolve,
    /// Linear-solve steady state against long-time evolution
    OracleCheck,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum EngineCommand {
    /// Time-domain run and windowed currents
    Run,
    /// Efficiency across an E3 grid and the stall at E3*
    CarnotCheck,
}

#[derive(Debug, Args)]
struct Flags {
    /// Bath temperatures, comma separated (3 for the fridge, 2 for the engine)
    #[arg(long = "T", global = true, value_delimiter = ',', allow_negative_numbers = true)]
    temperatures: Option<Vec<f64>>,
    /// Qubit 1 gap; derived as E2 + E3 for the engine
    #[arg(long = "E1", global = true, allow_negative_numbers = true)]
    e1: Option<f64>,
    /// Qubit 2 gap; derived from E1 and E3 when absent
    #[arg(long = "E2", global = true, allow_negative_numbers = true)]
    e2: Option<f64>,
    /// Qubit 3 gap (fridge) or weight level spacing (engine)
    #[arg(long = "E3", global = true, allow_negative_numbers = true)]
    e3: Option<f64>,
    /// Coupling strength
    #[arg(long, global = true, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Reset rates: one for all qubits or one per qubit
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    p: Option<Vec<f64>>,
    /// Weight ladder levels
    #[arg(long = "N", global = true)]
    ladder_levels: Option<usize>,
    /// Initial weight level
    #[arg(long, global = true)]
    n0: Option<usize>,
    /// Integration step
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Integration horizon
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Start of the engine measurement window
    #[arg(long, global = true)]
    window_start: Option<f64>,
    /// Number of recorded samples
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Swept parameter: E1, E3, g, T1, T2, T3, p1, p2, p3
    #[arg(long, global = true)]
    axis: Option<String>,
    /// Grid values: a comma list or start:stop:count
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Config file (TOML, or JSON by extension); flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Print the resolved configuration and exit
    #[arg(long, global = true)]
    print_config: bool,
    /// Seed for the random panels
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log applied defaults (-v) or more (-vv)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

/// Parses `start:stop:count` or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("grid value '{s}' is not a number")))
    };
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(number).collect(),
        [start, stop, count] => {
            let (a, b) = (number(start)?, number(stop)?);
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("grid count '{count}' is not a non-negative integer")))?;
            Ok(match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| ((n - 1 - k) as f64 * a + k as f64 * b) / (n - 1) as f64).collect(),
            })
        }
        _ => Err(Error::Config(format!("grid '{text}' must be a comma list or start:stop:count"))),
    }
}

impl Flags {
    fn to_config(&self, machine: MachineKind, command: Command) -> Result<ConfigFile> {
        let mut file = ConfigFile {
            machine: Some(machine),
            command: Some(command),
            e1: self.e1,
            e2: self.e2,
            e3: self.e3,
            temperatures: self.temperatures.clone(),
            g: self.g,
            p: self.p.clone(),
            seed: self.seed,
            ..Default::default()
        };
        let n = &mut file.numerics;
        n.dt = self.dt;
        n.horizon = self.horizon;
        n.window_start = self.window_start;
        n.samples = self.samples;
        n.ladder_levels = self.ladder_levels;
        n.n0 = self.n0;
        n.axis = self.axis.clone();
        n.grid = self.grid.as_deref().map(parse_grid).transpose()?;
        file.output.path = self.output.clone();
        file.output.format = self.format.as_deref().map(|f| match f {
            "csv" => OutputFormat::Csv,
            _ => OutputFormat::Json,
        });
        Ok(file)
    }
}

fn csv_unavailable(what: &str) -> Error {
    Error::Config(format!("{what} writes JSON only; use --format json"))
}

/// Runs a resolved configuration and writes its result. `Ok(false)` means
/// the run completed but a check failed.
pub fn execute(config: &RunConfig) -> Result<bool> {
    let format = config.output.format;
    let path = config.output.path.as_deref();
    let n = &config.numerics;
    match (&config.spec, config.command) {
        (RunSpec::Fridge { spec }, Command::Steady) => {
            let steady = solve_fridge(spec)?;
            let report = fridge_currents(spec, &steady)?;
            let doc = Document::new("steady_state", SteadyStateOutput::new(spec, &steady, report));
            emit(&doc, &[CsvRow::ok(None, &doc.result.currents)], format, path)?;
        }
        (RunSpec::Fridge { spec }, Command::Currents) => {
            let report = fridge_point(spec)?;
            let doc = Document::new("currents", CurrentsOutput { spec: *spec, report });
            emit(&doc, &[CsvRow::ok(None, &doc.result.report)], format, path)?;
        }
        (RunSpec::Fridge { spec }, Command::Sweep) => {
            let axis = n.axis.expect("resolve requires an axis for sweeps");
            if n.grid.is_empty() {
                warn!("empty sweep grid: writing a header-only table");
            }
            let table = sweep_fridge(spec, axis, &n.grid);
            let failed = table.rows.iter().filter(|r| r.report().is_none()).count();
            if failed > 0 {
                warn!("{failed} of {} sweep points failed; see their status field", table.rows.len());
            }
            let rows = sweep_rows(&table);
            emit(&Document::new("sweep", &table), &rows, format, path)?;
        }
        (RunSpec::Fridge { spec }, Command::CarnotCheck) => {
            let check = carnot_check_fridge(spec.temperatures(), spec.qubit3.energy, spec.coupling, spec.rates())?;
            let report = fridge_point(spec)?;
            let passed = check.passed;
            let doc = Document::new(
                "carnot_check",
                CarnotOutput {
                    check,
                    table: None,
                    report: Some(report),
                },
            );
            let row = CsvRow {
                status: if passed { "ok".into() } else { "error: Carnot check failed".into() },
                ..CsvRow::ok(Some(spec.qubit1.energy), doc.result.report.as_ref().expect("set above"))
            };
            emit(&doc, &[row], format, path)?;
            return Ok(passed);
        }
        (RunSpec::Fridge { spec }, Command::Evolve) => {
            let horizon = n.horizon.expect("resolved for evolve");
            let dt = n.dt.expect("resolved for evolve");
            let samples = n.samples.expect("resolved for evolve").max(1);
            let steady = solve_fridge(spec)?;
            let l = assemble_fridge_liouvillian(spec)?;
            let frame = l.interaction_frame()?;
            let (steps, _) = step_plan(&frame, horizon, dt)?;
            let traj = evolve(&frame, &spec.thermal_product(), horizon, dt, (steps / samples).max(1))?;
            let samples = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, state)| {
                    Ok(TrajectorySample {
                        t,
                        state: matrix_to_rows(state.matrix()),
                        report: fridge_currents_of_state(spec, state)?,
                        distance_to_steady: state.trace_distance(&steady.state),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let doc = Document::new(
                "trajectory",
                TrajectoryOutput {
                    spec: *spec,
                    step: traj.step_size,
                    samples,
                },
            );
            let rows: Vec<CsvRow> = doc.result.samples.iter().map(|s| CsvRow::ok(Some(s.t), &s.report)).collect();
            emit(&doc, &rows, format, path)?;
        }
        (RunSpec::Fridge { spec }, Command::OracleCheck) => {
            if format == OutputFormat::Csv {
                return Err(csv_unavailable("oracle-check"));
            }
            let report = oracle_crosscheck_with(spec, n.horizon, n.dt, n.oracle_tolerance)?;
            let passed = report.passed;
            emit(&Document::new("oracle_check", report), &[], format, path)?;
            return Ok(passed);
        }
        (RunSpec::Engine { spec }, Command::Run) => {
            let run = run_engine(spec, &n.engine())?;
            let rows = engine_rows(&run);
            emit(&Document::new("engine_run", &run), &rows, format, path)?;
        }
        (RunSpec::Engine { spec }, Command::CarnotCheck) => {
            let inputs = EngineCarnotInputs {
                temperatures: spec.temperatures(),
                e2: spec.qubit2.energy,
                e3_grid: n.grid.clone(),
                coupling: spec.coupling,
                rates: spec.rates(),
                ladder_levels: spec.ladder_levels,
                initial_level: spec.initial_level,
                numerics: n.engine(),
            };
            let (check, table) = carnot_check_engine(&inputs)?;
            let passed = check.passed;
            let doc = Document::new(
                "carnot_check",
                CarnotOutput {
                    check,
                    table: Some(table),
                    report: None,
                },
            );
            let rows = sweep_rows(doc.result.table.as_ref().expect("set above"));
            emit(&doc, &rows, format, path)?;
            return Ok(passed);
        }
        (spec, command) => {
            let machine = match spec {
                RunSpec::Fridge { .. } => MachineKind::Fridge,
                RunSpec::Engine { .. } => MachineKind::Engine,
            };
            return Err(Error::Config(format!("command '{}' is not available for the {machine}", command.name())));
        }
    }
    Ok(true)
}

fn selftest(flags: &Flags) -> Result<bool> {
    let format = flags.format.as_deref().map_or(OutputFormat::Json, |f| if f == "csv" { OutputFormat::Csv } else { OutputFormat::Json });
    if format == OutputFormat::Csv {
        return Err(csv_unavailable("selftest"));
    }
    let seed = flags.seed.unwrap_or_else(|| {
        info!("default applied: seed = {}", crate::defaults::SEED);
        crate::defaults::SEED
    });
    if flags.print_config {
        println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "command": "selftest", "seed": seed }))?);
        return Ok(true);
    }
    let report = run_selftest(seed);
    let passed = report.passed;
    for suite in &report.suites {
        for c in suite.checks.iter().filter(|c| !c.passed) {
            warn!("{}: {} = {} exceeds {}", suite.name, c.name, c.value, c.threshold);
        }
    }
    emit(&Document::new("selftest", report), &[], format, flags.output.as_deref())?;
    Ok(passed)
}

fn from_config_file(flags: &Flags) -> Result<(MachineKind, Command)> {
    let path = flags
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("no subcommand given and no --config to take one from".into()))?;
    let file = ConfigFile::load(path)?;
    match (file.machine, file.command) {
        (Some(machine), Some(command)) => Ok((machine, command)),
        _ => Err(Error::Config(format!(
            "{} must set 'machine' and 'command' when no subcommand is given",
            path.display()
        ))),
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let (machine, command) = match cli.machine {
        None => from_config_file(&cli.flags)?,
        Some(MachineCommand::Selftest) => return selftest(&cli.flags),
        Some(MachineCommand::Fridge { command }) => (
            MachineKind::Fridge,
            match command {
                FridgeCommand::Steady => Command::Steady,
                FridgeCommand::Currents => Command::Currents,
                FridgeCommand::Sweep => Command::Sweep,
                FridgeCommand::CarnotCheck => Command::CarnotCheck,
                FridgeCommand::Evolve => Command::Evolve,
                FridgeCommand::OracleCheck => Command::OracleCheck,
            },
        ),
        Some(MachineCommand::Engine { command }) => (
            MachineKind::Engine,
            match command {
                EngineCommand::Run => Command::Run,
                EngineCommand::CarnotCheck => Command::CarnotCheck,
            },
        ),
    };
    let flags = cli.flags.to_config(machine, command)?;
    let config = load_config(cli.flags.config.as_deref(), &flags)?;
    if config.machine() != machine || config.command != command {
        return Err(Error::Config(format!(
            "config file names '{} {}' but the command line runs '{machine} {}'",
            config.machine(),
            config.command.name(),
            command.name()
        )));
    }
    if cli.flags.print_config {
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(true);
    }
    execute(&config)
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_target(false)
        .format_timestamp(None)
        .parse_env("QTM_LOG")
        .try_init();
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.flags.verbose);
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error[check-failed]: one or more checks failed; see the report");
            2
        }
        Err(e) => {
            let reason = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {reason}", e.kind());
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
