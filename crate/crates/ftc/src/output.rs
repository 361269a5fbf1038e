//! CSV time series and TOML summaries.
//!
//! The CSV column order is part of the interface and only ever grows at the
//! end. Angles are in rad, forces in N, moments in N m. `fault_num` is the
//! thruster the detector is currently working on and `identified` the most
//! recent identification (0 = none for both); booleans are 0/1. Every
//! identification is also listed in a separate `time,thruster` file. A run that aborts keeps the rows written so far and ends with a
//! `# truncated` comment line.

use std::io::{self, Write};

use ftc_core::fdi::Identification;
use ftc_core::{SimRecord, Summary};
use serde::Serialize;

use crate::config::LoadedScenario;

pub const CSV_COLUMNS: [&str; 40] = [
    "t",
    "x",
    "y",
    "psi",
    "u",
    "v",
    "r",
    "x_d",
    "y_d",
    "psi_d",
    "e_x",
    "e_y",
    "e_psi",
    "residual",
    "threshold",
    "b_trig",
    "fault_num",
    "w1",
    "w2",
    "w3",
    "w4",
    "w_hat1",
    "w_hat2",
    "w_hat3",
    "w_hat4",
    "u1",
    "u2",
    "u3",
    "u4",
    "tau_c_x",
    "tau_c_y",
    "tau_c_n",
    "tau_x",
    "tau_y",
    "tau_n",
    "v2",
    "saturated",
    "armed",
    "hold",
    "identified",
];

/// Streams records as CSV rows.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
    rows: u64,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W) -> io::Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(inner);
        writer.write_record(CSV_COLUMNS).map_err(io::Error::from)?;
        Ok(Self { writer, rows: 0 })
    }

    /// `identified` is the most recently identified thruster, 0 if none yet.
    pub fn write(
        &mut self,
        r: &SimRecord,
        armed: bool,
        hold: bool,
        identified: usize,
    ) -> io::Result<()> {
        let mut row: Vec<String> = Vec::with_capacity(CSV_COLUMNS.len());
        let mut push = |v: f64| row.push(v.to_string());
        push(r.t);
        r.eta
            .iter()
            .chain(&r.nu)
            .chain(&r.eta_d)
            .chain(&r.e_eta)
            .for_each(|v| push(*v));
        push(r.residual);
        push(r.threshold);
        push(f64::from(u8::from(r.b_trig)));
        push(r.fault_num.unwrap_or(0) as f64);
        r.w.iter()
            .chain(&r.w_hat)
            .chain(&r.u_cmd)
            .chain(&r.tau_c)
            .chain(&r.tau)
            .for_each(|v| push(*v));
        push(r.v2);
        push(f64::from(u8::from(r.saturated)));
        push(f64::from(u8::from(armed)));
        push(f64::from(u8::from(hold)));
        push(identified as f64);
        self.writer.write_record(&row).map_err(io::Error::from)?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    /// Flushes and hands back the writer.
    pub fn finish(self) -> io::Result<W> {
        self.writer.into_inner().map_err(|e| e.into_error())
    }

    /// Marks the file as cut short and hands back the writer.
    pub fn truncate(self, time: f64, reason: &str) -> io::Result<W> {
        let mut inner = self.finish()?;
        writeln!(inner, "# truncated at t={time}: {reason}")?;
        Ok(inner)
    }
}

/// `time,thruster` for every identification.
pub fn write_identifications<W: Write>(inner: W, log: &[Identification]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(inner);
    w.write_record(["time", "thruster"])
        .map_err(io::Error::from)?;
    for id in log {
        w.write_record([id.time.to_string(), id.thruster.to_string()])
            .map_err(io::Error::from)?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub source: String,
    /// Exactly as given on the command line.
    pub overrides: Vec<String>,
    pub version: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time_s: f64,
}

impl Provenance {
    pub fn new(
        loaded: &LoadedScenario,
        status: &str,
        error: Option<String>,
        wall_time_s: f64,
    ) -> Self {
        Self {
            scenario: loaded.scenario.name.clone(),
            source: loaded.source.to_string(),
            overrides: loaded.overrides.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: status.into(),
            error,
            wall_time_s,
        }
    }
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    provenance: &'a Provenance,
    summary: &'a Summary,
}

/// The summary as a TOML document with a `[provenance]` table.
pub fn summary_toml(provenance: &Provenance, summary: &Summary) -> String {
    toml::to_string(&SummaryDoc {
        provenance,
        summary,
    })
    .expect("summary is representable in TOML")
}
