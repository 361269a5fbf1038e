//! Scenario and vehicle files.
//!
//! A scenario file is TOML with the sections `simulation`, `trajectory`,
//! `gains`, `fdi` and `faults`, plus an optional `vehicle_file` and/or
//! `[vehicle]` table. The vehicle is assembled from the default vehicle, then
//! `vehicle_file` (relative to the scenario file), then the inline
//! `[vehicle]` keys, so a scenario can change a single parameter such as
//! `u_max`. Every key except the trajectory is optional; see
//! `presets/vehicle.toml` and the presets for complete examples.
//!
//! Overrides (`key=value`) are applied after defaults are filled in, so
//! every documented key can be overridden whether or not the file sets it.

use std::fmt;
use std::path::{Path, PathBuf};

use ftc_core::math::{Mat3, Vec3, Vec4};
use ftc_core::{
    ControllerGains, FaultEvent, FaultSchedule, FdiConfig, Scenario, Segment, ThrusterGeometry,
    TrajectoryPlan, VehicleParams, VehicleState,
};
use serde::{Deserialize, Serialize};

use crate::overrides::{self, Override};
use crate::presets;

/// A 3x3 matrix given either by its diagonal or in full (row major).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diagonal([f64; 3]),
    Full([[f64; 3]; 3]),
}

impl MatrixSpec {
    pub fn to_matrix(self) -> Mat3 {
        match self {
            MatrixSpec::Diagonal(d) => Mat3::from_diagonal(&Vec3::from(d)),
            MatrixSpec::Full(rows) => Mat3::from_fn(|i, j| rows[i][j]),
        }
    }
}

/// Thrust coefficients: one value for all thrusters or one each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficients {
    Uniform(f64),
    PerThruster([f64; 4]),
}

impl Coefficients {
    pub fn to_vector(self) -> Vec4 {
        match self {
            Coefficients::Uniform(k) => Vec4::repeat(k),
            Coefficients::PerThruster(k) => Vec4::from(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    pub inertia: MatrixSpec,
    pub lin_damping: MatrixSpec,
    pub quad_damping: [f64; 3],
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixSpec>,
    pub alpha: f64,
    pub l: f64,
    #[serde(rename = "K")]
    pub k: Coefficients,
    pub u_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub duration: f64,
    pub decimation: usize,
    pub recovery_window: f64,
    pub convergence_radius: f64,
    pub divergence_limit: f64,
    /// Faults may not be scheduled before the loop has converged.
    pub earliest_fault: f64,
    pub fdi_enabled: bool,
    /// `[x, y, psi, u, v, r]`.
    pub initial_state: [f64; 6],
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            duration: 600.0,
            decimation: 10,
            recovery_window: 200.0,
            convergence_radius: 0.05,
            divergence_limit: 1e6,
            earliest_fault: 50.0,
            fdi_enabled: true,
            initial_state: [0.0; 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// `[x, y, psi]` at `t = 0`.
    pub initial: [f64; 3],
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsSection {
    pub gamma1: [f64; 3],
    pub gamma2: [f64; 3],
    pub a1: [f64; 3],
    pub a2: [f64; 3],
}

impl Default for GainsSection {
    fn default() -> Self {
        Self {
            gamma1: [1.0, 1.0, 10.0],
            gamma2: [100.0, 100.0, 300.0],
            a1: [1.0, 1.0, 10.0],
            a2: [100.0, 100.0, 300.0],
        }
    }
}

/// Partial vehicle table inside a scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleOverlay {
    pub inertia: Option<MatrixSpec>,
    pub lin_damping: Option<MatrixSpec>,
    pub quad_damping: Option<[f64; 3]>,
    #[serde(rename = "B")]
    pub b: Option<MatrixSpec>,
    pub alpha: Option<f64>,
    pub l: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<Coefficients>,
    pub u_max: Option<f64>,
}

impl VehicleOverlay {
    fn apply(self, v: &mut VehicleFile) {
        if let Some(x) = self.inertia {
            v.inertia = x;
        }
        if let Some(x) = self.lin_damping {
            v.lin_damping = x;
        }
        if let Some(x) = self.quad_damping {
            v.quad_damping = x;
        }
        if self.b.is_some() {
            v.b = self.b;
        }
        if let Some(x) = self.alpha {
            v.alpha = x;
        }
        if let Some(x) = self.l {
            v.l = x;
        }
        if let Some(x) = self.k {
            v.k = x;
        }
        if let Some(x) = self.u_max {
            v.u_max = x;
        }
    }
}

/// The scenario file as written.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    #[serde(default)]
    description: String,
    budget_seconds: Option<f64>,
    vehicle_file: Option<PathBuf>,
    vehicle: Option<VehicleOverlay>,
    #[serde(default)]
    simulation: SimulationSection,
    trajectory: TrajectorySection,
    #[serde(default)]
    gains: GainsSection,
    #[serde(default)]
    fdi: FdiConfig,
    #[serde(default)]
    faults: Vec<FaultEvent>,
}

/// Fully resolved scenario description; this is what overrides act on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_seconds: Option<f64>,
    pub vehicle: VehicleFile,
    pub simulation: SimulationSection,
    pub gains: GainsSection,
    pub fdi: FdiConfig,
    pub trajectory: TrajectorySection,
    pub faults: Vec<FaultEvent>,
}

/// Where a scenario came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Preset(String),
    File(PathBuf),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Preset(name) => write!(f, "preset:{name}"),
            Source::File(path) => write!(f, "{}", path.display()),
        }
    }
}

/// A problem with a scenario, located in a file where possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// File (or preset) the problem is in.
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.origin, line, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub source: Source,
    pub config: ScenarioConfig,
    pub scenario: Scenario,
    /// Overrides as given on the command line.
    pub overrides: Vec<String>,
}

/// Text of a file, tagged with where it came from for error messages.
struct Document {
    origin: String,
    text: String,
    dir: Option<PathBuf>,
}

impl Document {
    fn error(&self, line: Option<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origin.clone(),
            line,
            message: message.into(),
        }
    }

    fn toml_error(&self, e: toml::de::Error) -> ConfigError {
        let line = e.span().map(|s| line_of(&self.text, s.start));
        self.error(line, e.message().trim().to_string())
    }

    fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, ConfigError> {
        toml::from_str(&self.text).map_err(|e| self.toml_error(e))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|b| *b == b'\n')
        .count()
        + 1
}

/// Line of the first `key = ...` assignment, optionally the `nth` one.
fn find_key(text: &str, key: &str, nth: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .nth(nth)
        .map(|(i, _)| i + 1)
}

/// Line of the `nth` (0-based) `[[header]]`.
fn find_array_header(text: &str, header: &str, nth: usize) -> Option<usize> {
    let tag = format!("[[{header}]]");
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == tag)
        .nth(nth)
        .map(|(i, _)| i + 1)
}

/// Resolves a CLI scenario argument: an existing file, or a preset name.
/// Arguments that look like paths but do not exist are I/O errors.
pub fn resolve_source(arg: &str) -> Result<Source, LoadError> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(Source::File(path.to_path_buf()));
    }
    let name = arg.strip_prefix("preset:").unwrap_or(arg);
    if let Some(p) = presets::find(name) {
        return Ok(Source::Preset(p.name.to_string()));
    }
    if path.extension().is_some() || arg.contains(std::path::MAIN_SEPARATOR) {
        return Err(LoadError::Io(
            path.to_path_buf(),
            std::io::ErrorKind::NotFound.into(),
        ));
    }
    Err(LoadError::from(ConfigError {
        origin: arg.to_string(),
        line: None,
        message: "no such file or preset (see `ftc list-presets`)".into(),
    }))
}

fn read_source(source: &Source) -> Result<Document, LoadError> {
    match source {
        Source::Preset(name) => {
            let p = presets::find(name).ok_or_else(|| {
                LoadError::Invalid(vec![ConfigError {
                    origin: source.to_string(),
                    line: None,
                    message: "unknown preset".into(),
                }])
            })?;
            Ok(Document {
                origin: source.to_string(),
                text: p.text.to_string(),
                dir: None,
            })
        }
        Source::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io(path.clone(), e))?;
            Ok(Document {
                origin: path.display().to_string(),
                text,
                dir: path.parent().map(Path::to_path_buf),
            })
        }
    }
}

/// Why a scenario could not be loaded.
#[derive(Debug)]
pub enum LoadError {
    Io(PathBuf, std::io::Error),
    Invalid(Vec<ConfigError>),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            LoadError::Invalid(errors) => {
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

impl From<ConfigError> for LoadError {
    fn from(e: ConfigError) -> Self {
        LoadError::Invalid(vec![e])
    }
}

/// Parses a vehicle file.
pub fn parse_vehicle(text: &str) -> Result<VehicleFile, ConfigError> {
    Document {
        origin: "vehicle".into(),
        text: text.into(),
        dir: None,
    }
    .parse()
}

/// Loads, overrides and validates a scenario.
pub fn load(source: &Source, overrides: &[Override]) -> Result<LoadedScenario, LoadError> {
    let doc = read_source(source)?;
    let raw: RawScenario = doc.parse()?;

    let vehicle_doc = match &raw.vehicle_file {
        None => Document {
            origin: "preset:vehicle".into(),
            text: presets::DEFAULT_VEHICLE.into(),
            dir: None,
        },
        Some(rel) => match &doc.dir {
            Some(dir) => {
                let path = dir.join(rel);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| LoadError::Io(path.clone(), e))?;
                Document {
                    origin: path.display().to_string(),
                    text,
                    dir: None,
                }
            }
            // Presets only refer to the shipped default vehicle.
            None => Document {
                origin: "preset:vehicle".into(),
                text: presets::DEFAULT_VEHICLE.into(),
                dir: None,
            },
        },
    };
    let mut vehicle: VehicleFile = vehicle_doc.parse()?;
    if let Some(overlay) = raw.vehicle {
        overlay.apply(&mut vehicle);
    }

    let mut config = ScenarioConfig {
        name: raw.name.unwrap_or_else(|| default_name(source)),
        description: raw.description,
        budget_seconds: raw.budget_seconds,
        vehicle,
        simulation: raw.simulation,
        gains: raw.gains,
        fdi: raw.fdi,
        trajectory: raw.trajectory,
        faults: raw.faults,
    };
    if !overrides.is_empty() {
        config =
            overrides::apply(&config, overrides).map_err(|message| doc.error(None, message))?;
    }

    let scenario = build(&config).map_err(|issue| {
        let (doc, line) = locate(&issue, &doc, &vehicle_doc);
        LoadError::from(doc.error(line, issue.message))
    })?;
    Ok(LoadedScenario {
        source: source.clone(),
        config,
        scenario,
        overrides: overrides.iter().map(|o| o.text.clone()).collect(),
    })
}

fn default_name(source: &Source) -> String {
    match source {
        Source::Preset(n) => n.clone(),
        Source::File(p) => p
            .file_stem()
            .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned()),
    }
}

/// A semantic problem and the key it belongs to.
#[derive(Debug)]
struct Issue {
    key: Key,
    message: String,
}

#[derive(Debug, Clone, Copy)]
enum Key {
    Vehicle(&'static str),
    Scenario(&'static str),
    Segment(usize),
    Fault(usize),
}

fn locate<'a>(
    issue: &Issue,
    scenario: &'a Document,
    vehicle: &'a Document,
) -> (&'a Document, Option<usize>) {
    match issue.key {
        Key::Vehicle(k) => match find_key(&scenario.text, k, 0) {
            // The scenario's own [vehicle] table takes precedence.
            Some(line) if scenario.text.contains("[vehicle]") => (scenario, Some(line)),
            _ => (vehicle, find_key(&vehicle.text, k, 0)),
        },
        Key::Scenario(k) => (scenario, find_key(&scenario.text, k, 0)),
        Key::Segment(i) => (
            scenario,
            find_array_header(&scenario.text, "trajectory.segments", i),
        ),
        Key::Fault(i) => (scenario, find_array_header(&scenario.text, "faults", i)),
    }
}

fn vehicle_key(e: &ftc_core::Error) -> &'static str {
    use ftc_core::Error;
    match e {
        Error::Geometry { .. } | Error::RankDeficient => "alpha",
        Error::NotPositiveDefinite(what) if what.contains("B") => "B",
        Error::NotPositiveDefinite(_) => "inertia",
        Error::Parameter {
            name: "damping", ..
        } => "lin_damping",
        _ => "inertia",
    }
}

fn issue(key: Key, e: impl fmt::Display) -> Issue {
    Issue {
        key,
        message: e.to_string(),
    }
}

/// Builds the simulator scenario, checking every invariant.
fn build(c: &ScenarioConfig) -> Result<Scenario, Issue> {
    let v = &c.vehicle;
    let params = VehicleParams::new(
        v.inertia.to_matrix(),
        v.lin_damping.to_matrix(),
        Vec3::from(v.quad_damping),
        v.b.map(MatrixSpec::to_matrix),
    )
    .map_err(|e| issue(Key::Vehicle(vehicle_key(&e)), e))?;
    let geometry = ThrusterGeometry::new(v.alpha, v.l).map_err(|e| {
        issue(
            Key::Vehicle(if v.alpha > 0.0 && v.alpha < 1.5 {
                "l"
            } else {
                "alpha"
            }),
            e,
        )
    })?;

    let g = &c.gains;
    let gains = ControllerGains::new(
        Vec3::from(g.gamma1),
        Vec3::from(g.gamma2),
        Vec3::from(g.a1),
        Vec3::from(g.a2),
    )
    .map_err(|e| {
        let key = match &e {
            ftc_core::Error::Parameter { name, .. } => gain_key(name),
            _ => "gamma1",
        };
        issue(Key::Scenario(key), e)
    })?;

    let plan = TrajectoryPlan::new(
        Vec3::from(c.trajectory.initial),
        c.trajectory.segments.clone(),
    )
    .map_err(|e| {
        let key = match &e {
            ftc_core::Error::Plan { segment, .. } if *segment > 0 => Key::Segment(segment - 1),
            _ => Key::Scenario("initial"),
        };
        issue(key, e)
    })?;

    let s = &c.simulation;
    let schedule = FaultSchedule::new(c.faults.clone(), s.earliest_fault).map_err(|e| {
        let key = match &e {
            ftc_core::ScheduleError::ThrusterIndex { event, .. }
            | ftc_core::ScheduleError::WeightRange { event, .. }
            | ftc_core::ScheduleError::NotIncreasing { event, .. }
            | ftc_core::ScheduleError::WeightIncrease { event, .. }
            | ftc_core::ScheduleError::TooEarly { event, .. } => {
                Key::Fault(event.saturating_sub(1))
            }
        };
        issue(key, e)
    })?;

    let [x, y, psi, u, vv, r] = s.initial_state;
    let mut sc = Scenario::new(
        c.name.clone(),
        params,
        geometry,
        v.k.to_vector(),
        v.u_max,
        plan,
    );
    sc.gains = gains;
    sc.fdi = c.fdi;
    sc.fdi_enabled = s.fdi_enabled;
    sc.schedule = schedule;
    sc.initial_state = VehicleState::new(x, y, psi, u, vv, r);
    sc.dt = s.dt;
    sc.duration = s.duration;
    sc.decimation = s.decimation;
    sc.recovery_window = s.recovery_window;
    sc.convergence_radius = s.convergence_radius;
    sc.divergence_limit = s.divergence_limit;
    sc.validate().map_err(|e| {
        let key = match &e {
            ftc_core::Error::Parameter { name, .. } => match *name {
                "u_max" => Key::Vehicle("u_max"),
                "K" => Key::Vehicle("K"),
                n => Key::Scenario(n),
            },
            _ => Key::Scenario("dt"),
        };
        issue(key, e)
    })?;
    if s.earliest_fault < 0.0 || !s.earliest_fault.is_finite() {
        return Err(Issue {
            key: Key::Scenario("earliest_fault"),
            message: "must be a non-negative time".into(),
        });
    }
    Ok(sc)
}

fn gain_key(name: &str) -> &'static str {
    match name {
        "gamma2" => "gamma2",
        "a1" => "a1",
        "a2" => "a2",
        _ => "gamma1",
    }
}
