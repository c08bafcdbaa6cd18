//! Run configuration.
//!
//! A run is described by a [`ConfigFile`] (TOML, or JSON when the file ends
//! in `.json`) overlaid with command-line flags, then resolved into a
//! validated [`RunConfig`]. Parsing is strict: unknown keys are errors.
//!
//! ```toml
//! machine = "fridge"
//! command = "sweep"
//! E1 = 1.0
//! E3 = 1.0
//! T = [10.0, 5.0, 4.0]
//! g = 0.01
//! p = [1e-3, 1e-3, 1e-3]
//!
//! [numerics]
//! axis = "E1"
//! grid = [0.1, 0.4, 0.7, 1.0]
//!
//! [output]
//! format = "csv"
//! path = "sweep.csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::engine::EngineNumerics;
use crate::error::{Error, Result};
use crate::liouvillian::{assemble_engine_liouvillian, assemble_fridge_liouvillian};
use crate::machine::{EngineSpec, FridgeSpec, MachineKind};
use crate::solvers::default_step;
use crate::sweep::{reversibility_point_engine, reversibility_point_fridge, FridgeParam};
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Steady,
    Evolve,
    Currents,
    Sweep,
    CarnotCheck,
    OracleCheck,
    Run,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Evolve => "evolve",
            Command::Currents => "currents",
            Command::Sweep => "sweep",
            Command::CarnotCheck => "carnot-check",
            Command::OracleCheck => "oracle-check",
            Command::Run => "run",
        }
    }

    fn allowed(&self, machine: MachineKind) -> bool {
        match machine {
            MachineKind::Fridge => !matches!(self, Command::Run),
            MachineKind::Engine => matches!(self, Command::Run | Command::CarnotCheck),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// `[numerics]` section; every field optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsFile {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub window_start: Option<f64>,
    pub samples: Option<usize>,
    #[serde(rename = "N")]
    pub ladder_levels: Option<usize>,
    pub n0: Option<usize>,
    pub axis: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub oracle_tolerance: Option<f64>,
}

/// `[output]` section.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub path: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// Configuration as written, before defaults and validation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub machine: Option<MachineKind>,
    pub command: Option<Command>,
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
    #[serde(rename = "E3")]
    pub e3: Option<f64>,
    #[serde(rename = "T")]
    pub temperatures: Option<Vec<f64>>,
    pub g: Option<f64>,
    /// One rate for every qubit, or one per qubit.
    pub p: Option<Vec<f64>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub numerics: NumericsFile,
    #[serde(default)]
    pub output: OutputFile,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident).+) => {
        if $top.$($field).+.is_some() {
            $base.$($field).+ = $top.$($field).+.clone();
        }
    };
}

impl ConfigFile {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {}", path.display(), e.trim_end())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &ConfigFile) -> Self {
        overlay!(self, top, machine);
        overlay!(self, top, command);
        overlay!(self, top, e1);
        overlay!(self, top, e2);
        overlay!(self, top, e3);
        overlay!(self, top, temperatures);
        overlay!(self, top, g);
        overlay!(self, top, p);
        overlay!(self, top, seed);
        overlay!(self, top, numerics.dt);
        overlay!(self, top, numerics.horizon);
        overlay!(self, top, numerics.window_start);
        overlay!(self, top, numerics.samples);
        overlay!(self, top, numerics.ladder_levels);
        overlay!(self, top, numerics.n0);
        overlay!(self, top, numerics.axis);
        overlay!(self, top, numerics.grid);
        overlay!(self, top, numerics.oracle_tolerance);
        overlay!(self, top, output.path);
        overlay!(self, top, output.format);
        self
    }
}

/// Numerical settings after defaults. `None` means "chosen per point".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub window_start: Option<f64>,
    pub samples: Option<usize>,
    pub axis: Option<FridgeParam>,
    pub grid: Vec<f64>,
    pub oracle_tolerance: f64,
}

impl Numerics {
    pub fn engine(&self) -> EngineNumerics {
        EngineNumerics {
            horizon: self.horizon,
            window_start: self.window_start,
            dt: self.dt,
            samples: self.samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Machine parameters of a resolved run. For `carnot-check` the spec sits
/// at the reversibility point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "machine", rename_all = "lowercase")]
pub enum RunSpec {
    Fridge { spec: FridgeSpec },
    Engine { spec: EngineSpec },
}

/// A fully resolved, validated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub spec: RunSpec,
    pub numerics: Numerics,
    pub output: Output,
    pub seed: u64,
}

impl RunConfig {
    pub fn machine(&self) -> MachineKind {
        match self.spec {
            RunSpec::Fridge { .. } => MachineKind::Fridge,
            RunSpec::Engine { .. } => MachineKind::Engine,
        }
    }
}

fn required<T: Copy>(value: Option<T>, key: &str, context: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required key '{key}' for {context}")))
}

fn fixed<const K: usize>(values: &[f64], key: &str) -> Result<[f64; K]> {
    values
        .try_into()
        .map_err(|_| Error::Config(format!("'{key}' needs {K} values, got {}", values.len())))
}

fn rates<const K: usize>(p: &[f64]) -> Result<[f64; K]> {
    match p {
        [single] => Ok([*single; K]),
        _ => fixed::<K>(p, "p"),
    }
}

fn defaulted<T: std::fmt::Debug>(value: Option<T>, key: &str, default: impl FnOnce() -> T, rule: &str) -> T {
    value.unwrap_or_else(|| {
        let v = default();
        info!("default applied: {key} = {v:?} ({rule})");
        v
    })
}

fn consistent(given: Option<f64>, derived: f64, key: &str, relation: &str) -> Result<()> {
    match given {
        Some(v) if tolerances::relative_difference(v, derived) > 1e-12 => Err(Error::Config(format!(
            "{key} = {v} contradicts {relation} = {derived}"
        ))),
        _ => Ok(()),
    }
}

/// Applies defaults and validates `file` into a [`RunConfig`].
pub fn resolve(file: &ConfigFile) -> Result<RunConfig> {
    let filled = fill_swept_field(file);
    let file = &filled;
    let machine = required(file.machine, "machine", "the run")?;
    let command = required(file.command, "command", "the run")?;
    if !command.allowed(machine) {
        return Err(Error::Config(format!("command '{}' is not available for the {machine}", command.name())));
    }
    let context = format!("{machine} {}", command.name());
    let n = &file.numerics;
    let temperatures = file
        .temperatures
        .as_deref()
        .ok_or_else(|| Error::Config(format!("missing required key 'T' for {context}")))?;
    let p = file
        .p
        .as_deref()
        .ok_or_else(|| Error::Config(format!("missing required key 'p' for {context}")))?;
    let g = required(file.g, "g", &context)?;
    let e3 = required(file.e3, "E3", &context);

    let spec = match machine {
        MachineKind::Fridge => {
            if n.ladder_levels.is_some() || n.n0.is_some() {
                return Err(Error::Config("'N' and 'n0' apply only to the engine".into()));
            }
            let t = fixed::<3>(temperatures, "T")?;
            let p = rates::<3>(p)?;
            let e3 = e3?;
            let e1 = if command == Command::CarnotCheck {
                let e1_star = reversibility_point_fridge(t[0], t[1], t[2], e3)?;
                consistent(file.e1, e1_star, "E1", "the reversibility point E1*")?;
                info!("derived: E1 = E1* = {e1_star}");
                e1_star
            } else {
                required(file.e1, "E1", &context)?
            };
            consistent(file.e2, e1 + e3, "E2", "E1 + E3")?;
            info!("derived: E2 = E1 + E3 = {}", e1 + e3);
            let spec = if command == Command::Sweep {
                // sweep points are validated individually
                FridgeSpec::new_relaxed(e1, e3, t, p, g)?
            } else {
                FridgeSpec::new(e1, e3, t, p, g)?
            };
            RunSpec::Fridge { spec }
        }
        MachineKind::Engine => {
            if file.e1.is_some() && file.e2.is_none() {
                return Err(Error::Config("engine takes E2 and E3; E1 = E2 + E3 is derived".into()));
            }
            let t = fixed::<2>(temperatures, "T")?;
            let p = rates::<2>(p)?;
            let e2 = required(file.e2, "E2", &context)?;
            let e3 = if command == Command::CarnotCheck {
                let e3_star = reversibility_point_engine(t[0], t[1], e2)?;
                if file.e3.is_some() {
                    return Err(Error::Config(format!(
                        "engine carnot-check derives E3* = {e3_star}; set the measured points with 'grid'"
                    )));
                }
                info!("derived: E3* = {e3_star}");
                e3_star
            } else {
                e3?
            };
            consistent(file.e1, e2 + e3, "E1", "E2 + E3")?;
            info!("derived: E1 = E2 + E3 = {}", e2 + e3);
            let levels = defaulted(n.ladder_levels, "numerics.N", || defaults::LADDER_LEVELS, "default ladder");
            let n0 = defaulted(n.n0, "numerics.n0", || defaults::INITIAL_LEVEL, "default start level");
            RunSpec::Engine {
                spec: EngineSpec::new(e2, e3, t, p, levels, n0, g)?,
            }
        }
    };

    let axis = match (&n.axis, command) {
        (Some(a), Command::Sweep) => Some(a.parse::<FridgeParam>()?),
        (None, Command::Sweep) => return Err(Error::Config("sweep needs 'axis'".into())),
        (Some(_), _) => return Err(Error::Config("'axis' applies only to sweeps".into())),
        (None, _) => None,
    };
    let grid = match (&n.grid, command, &spec) {
        (Some(grid), Command::Sweep, _) => grid.clone(),
        (None, Command::Sweep, _) => return Err(Error::Config("sweep needs 'grid'".into())),
        (Some(grid), Command::CarnotCheck, RunSpec::Engine { .. }) => grid.clone(),
        (None, Command::CarnotCheck, RunSpec::Engine { spec }) => defaulted(
            None,
            "numerics.grid",
            || defaults::ENGINE_GRID_FRACTIONS.iter().map(|f| f * spec.ladder_step).collect(),
            "fractions of E3*",
        ),
        (Some(_), _, _) => return Err(Error::Config(format!("'grid' does not apply to {context}"))),
        (None, _, _) => Vec::new(),
    };
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("grid values must be finite".into()));
    }

    let mut numerics = Numerics {
        dt: n.dt,
        horizon: n.horizon,
        window_start: n.window_start,
        samples: n.samples,
        axis,
        grid,
        oracle_tolerance: if command == Command::OracleCheck {
            defaulted(n.oracle_tolerance, "numerics.oracle_tolerance", || tolerances::ORACLE_PANEL, "oracle tolerance")
        } else {
            n.oracle_tolerance.unwrap_or(tolerances::ORACLE_PANEL)
        },
    };
    for (key, value) in [("dt", numerics.dt), ("horizon", numerics.horizon)] {
        if value.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Config(format!("numerics.{key} must be positive")));
        }
    }
    match (&spec, command) {
        (RunSpec::Fridge { spec }, Command::Evolve | Command::OracleCheck) => {
            let l = assemble_fridge_liouvillian(spec)?;
            let frame = l.interaction_frame()?;
            let p_min = spec.rates().iter().fold(f64::INFINITY, |a, b| a.min(*b));
            numerics.horizon = Some(defaulted(
                numerics.horizon,
                "numerics.horizon",
                || defaults::FRIDGE_HORIZON_RESET_TIMES / p_min,
                "200 / min(p)",
            ));
            numerics.dt = Some(defaulted(numerics.dt, "numerics.dt", || default_step(&frame), "0.05 / ‖L‖"));
            if command == Command::Evolve {
                numerics.samples = Some(defaulted(
                    numerics.samples,
                    "numerics.samples",
                    || defaults::FRIDGE_EVOLVE_SAMPLES,
                    "evolve samples",
                ));
            }
        }
        (RunSpec::Engine { spec }, Command::Run) => {
            let (horizon, start, samples) = numerics.engine().resolve(spec);
            numerics.horizon = Some(defaulted(numerics.horizon, "numerics.horizon", || horizon, "50 / min(p)"));
            numerics.window_start =
                Some(defaulted(numerics.window_start, "numerics.window_start", || start, "30 / min(p)"));
            numerics.samples = Some(defaulted(numerics.samples, "numerics.samples", || samples, "engine samples"));
            let l = assemble_engine_liouvillian(spec)?;
            let frame = l.interaction_frame()?;
            numerics.dt = Some(defaulted(numerics.dt, "numerics.dt", || default_step(&frame), "0.05 / ‖L‖"));
        }
        _ => {}
    }

    let output = Output {
        path: file.output.path.clone(),
        format: defaulted(file.output.format, "output.format", OutputFormat::default, "JSON"),
    };
    let seed = defaulted(file.seed, "seed", || defaults::SEED, "default seed");
    Ok(RunConfig {
        command,
        spec,
        numerics,
        output,
        seed,
    })
}

/// [`ConfigFile::load`] when a path is given, overlaid with `flags`, then [`resolve`]d.
/// A fridge sweep over E1, E3 or g may leave that field out; the first
/// grid value stands in for it in the template.
fn fill_swept_field(file: &ConfigFile) -> ConfigFile {
    let mut file = file.clone();
    if file.machine != Some(MachineKind::Fridge) || file.command != Some(Command::Sweep) {
        return file;
    }
    let (Some(axis), Some(&first)) = (
        file.numerics.axis.as_deref().and_then(|a| a.parse::<FridgeParam>().ok()),
        file.numerics.grid.as_deref().and_then(|g| g.first()),
    ) else {
        return file;
    };
    let slot = match axis {
        FridgeParam::E1 => &mut file.e1,
        FridgeParam::E3 => &mut file.e3,
        FridgeParam::Coupling => &mut file.g,
        _ => return file,
    };
    if slot.is_none() {
        *slot = Some(first);
        info!("default applied: template {} = {first} (first grid value)", axis.name());
    }
    file
}

pub fn load_config(path: Option<&Path>, flags: &ConfigFile) -> Result<RunConfig> {
    let base = match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    resolve(&base.overlay(flags))
}
