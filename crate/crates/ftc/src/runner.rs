//! Running scenarios and writing their artifacts.

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ftc_core::{Simulation, Summary};
use rayon::prelude::*;

use crate::config::{self, LoadError, LoadedScenario};
use crate::output::{self, CsvSink, Provenance};
use crate::overrides::Override;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    Diverged,
    Invalid,
    IoError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Completed => exit::OK,
            Status::Diverged => exit::DIVERGENCE,
            Status::Invalid => exit::VALIDATION,
            Status::IoError => exit::IO,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::Diverged => "diverged",
            Status::Invalid => "invalid",
            Status::IoError => "io-error",
        }
    }
}

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Scenario name, or the argument if it never loaded.
    pub name: String,
    pub status: Status,
    pub summary: Option<Summary>,
    pub message: Option<String>,
    pub wall_time_s: f64,
    /// Files written, in order: CSV, identifications, summary.
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn failed(name: &str, status: Status, message: String) -> Self {
        Self {
            name: name.into(),
            status,
            summary: None,
            message: Some(message),
            wall_time_s: 0.0,
            artifacts: vec![],
        }
    }
}

/// Artifact paths for a scenario named `name` in `dir`.
pub fn artifact_paths(dir: &Path, name: &str) -> [PathBuf; 3] {
    [
        dir.join(format!("{name}.csv")),
        dir.join(format!("{name}_identifications.csv")),
        dir.join(format!("{name}_summary.toml")),
    ]
}

/// Loads and validates a scenario given as a path or preset name.
pub fn load(arg: &str, overrides: &[Override]) -> Result<LoadedScenario, LoadError> {
    config::load(&config::resolve_source(arg)?, overrides)
}

/// Runs a loaded scenario, writing CSV and summary into `out_dir`.
pub fn run_loaded(loaded: &LoadedScenario, out_dir: &Path) -> Outcome {
    let name = loaded.scenario.name.clone();
    match execute(loaded, out_dir) {
        Ok(o) => o,
        Err(e) => Outcome::failed(&name, Status::IoError, e.to_string()),
    }
}

fn execute(loaded: &LoadedScenario, out_dir: &Path) -> io::Result<Outcome> {
    fs::create_dir_all(out_dir)?;
    let sc = &loaded.scenario;
    let [csv_path, ids_path, summary_path] = artifact_paths(out_dir, &sc.name);
    let mut sink = CsvSink::new(BufWriter::new(File::create(&csv_path)?))?;

    let start = Instant::now();
    let mut sim =
        Simulation::new(sc.clone()).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let decimation = sc.decimation as u64;
    let mut k = 0u64;
    let mut failure = None;
    while !sim.is_finished() {
        match sim.step() {
            Ok(rec) => {
                if k.is_multiple_of(decimation) {
                    let fdi = sim.fdi();
                    let last = fdi.identified_log.last().map_or(0, |i| i.thruster);
                    sink.write(&rec, fdi.armed, fdi.in_hold(), last)?;
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        k += 1;
    }
    let wall = start.elapsed().as_secs_f64();
    let mut summary = sim.summary();

    let (status, message) = match &failure {
        None => {
            sink.finish()?;
            (Status::Completed, None)
        }
        Some(e) => {
            summary.aborted_at = Some(sim.time());
            sink.truncate(sim.time(), &e.to_string())?;
            (Status::Diverged, Some(e.to_string()))
        }
    };
    output::write_identifications(
        BufWriter::new(File::create(&ids_path)?),
        &sim.fdi().identified_log,
    )?;
    let provenance = Provenance::new(loaded, status.as_str(), message.clone(), wall);
    fs::write(&summary_path, output::summary_toml(&provenance, &summary))?;

    Ok(Outcome {
        name: sc.name.clone(),
        status,
        summary: Some(summary),
        message,
        wall_time_s: wall,
        artifacts: vec![csv_path, ids_path, summary_path],
    })
}

/// Loads and runs one scenario argument.
pub fn run(arg: &str, overrides: &[Override], out_dir: &Path) -> Outcome {
    match load(arg, overrides) {
        Ok(loaded) => run_loaded(&loaded, out_dir),
        Err(LoadError::Io(path, e)) => {
            Outcome::failed(arg, Status::IoError, format!("{}: {e}", path.display()))
        }
        Err(e @ LoadError::Invalid(_)) => Outcome::failed(arg, Status::Invalid, e.to_string()),
    }
}

/// Runs independent scenarios in parallel; results keep the input order.
/// A failing scenario is recorded and does not stop the others.
pub fn batch(args: &[String], overrides: &[Override], out_dir: &Path) -> Vec<Outcome> {
    args.par_iter()
        .map(|a| run(a, overrides, out_dir))
        .collect()
}

pub const BATCH_COLUMNS: [&str; 10] = [
    "scenario",
    "status",
    "detections",
    "identified",
    "false_triggers",
    "reconfiguration_failed",
    "max_residual_fault_free",
    "convergence_time",
    "wall_time_s",
    "message",
];

/// One CSV row per outcome. `identified` lists the first identification of
/// every scheduled fault, `;`-separated, 0 where none was made.
pub fn batch_table(outcomes: &[Outcome]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BATCH_COLUMNS).expect("in-memory write");
    for o in outcomes {
        let s = o.summary.as_ref();
        let opt = |v: Option<String>| v.unwrap_or_default();
        w.write_record([
            o.name.clone(),
            o.status.as_str().to_string(),
            opt(s.map(|s| s.detections.len().to_string())),
            opt(s.map(|s| {
                s.faults
                    .iter()
                    .map(|f| f.identified.unwrap_or(0).to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            })),
            opt(s.map(|s| s.false_triggers.to_string())),
            opt(s.map(|s| s.reconfiguration_failed.to_string())),
            opt(s.map(|s| s.max_residual_fault_free.to_string())),
            opt(s.and_then(|s| s.convergence_time).map(|t| t.to_string())),
            o.wall_time_s.to_string(),
            o.message.clone().unwrap_or_default().replace('\n', " | "),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

/// Exit code for a batch: 0 if every scenario completed, otherwise the code
/// of the first one that did not.
pub fn batch_exit_code(outcomes: &[Outcome]) -> i32 {
    outcomes
        .iter()
        .map(|o| o.status.exit_code())
        .find(|c| *c != exit::OK)
        .unwrap_or(exit::OK)
}
