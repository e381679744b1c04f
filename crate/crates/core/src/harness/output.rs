//! CSV and JSON writers. Floats are rounded to 9 significant digits and
//! printed in their shortest form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{MetricsRow, COLUMNS};
use super::runner::SweepBlock;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn rounded(row: &MetricsRow) -> MetricsRow {
    MetricsRow {
        ber_total: round_sig(row.ber_total),
        ber_intensity: round_sig(row.ber_intensity),
        ber_time: round_sig(row.ber_time),
        ber_phase: round_sig(row.ber_phase),
        erasure_rate: round_sig(row.erasure_rate),
        bits_per_pulse: round_sig(row.bits_per_pulse),
        mean_photons_at_bob: round_sig(row.mean_photons_at_bob),
        ..row.clone()
    }
}

fn fields(row: &MetricsRow) -> [String; 14] {
    let r = rounded(row);
    [
        r.trial_id.to_string(),
        r.protocol,
        r.symbols_sent.to_string(),
        r.ber_total.to_string(),
        r.ber_intensity.to_string(),
        r.ber_time.to_string(),
        r.ber_phase.to_string(),
        r.erasure_rate.to_string(),
        r.bits_per_pulse.to_string(),
        r.eve_model,
        r.eve_detected.to_string(),
        r.aborted.to_string(),
        r.mean_photons_at_bob.to_string(),
        r.seed.to_string(),
    ]
}

fn csv_err(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(fields(row)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn write_json<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let rows: Vec<MetricsRow> = rows.iter().map(rounded).collect();
    serde_json::to_writer_pretty(out, &rows).map_err(|e| Error::Serialization(e.to_string()))
}

/// Sweep CSV: the parameter and value lead, then the metrics columns.
pub fn write_sweep_csv<W: Write>(blocks: &[SweepBlock], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = ["param", "value"].into_iter().chain(COLUMNS).collect();
    w.write_record(header).map_err(csv_err)?;
    for b in blocks {
        for row in &b.rows {
            let lead = [b.param.clone(), round_sig(b.value).to_string()];
            w.write_record(lead.into_iter().chain(fields(row))).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Serialization(e.to_string()))
}

pub fn write_sweep_json<W: Write>(blocks: &[SweepBlock], out: W) -> Result<()> {
    let blocks: Vec<SweepBlock> = blocks
        .iter()
        .map(|b| SweepBlock { param: b.param.clone(), value: b.value, rows: b.rows.iter().map(rounded).collect() })
        .collect();
    serde_json::to_writer_pretty(out, &blocks).map_err(|e| Error::Serialization(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Serialization(msg) => Error::Io { path: path.to_path_buf(), source: std::io::Error::other(msg) },
        other => other,
    }
}

pub fn write_results(rows: &[MetricsRow], format: Format, path: &Path) -> Result<()> {
    let out = create(path)?;
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    }
    .map_err(|e| with_path(path, e))
}

pub fn write_sweep(blocks: &[SweepBlock], format: Format, path: &Path) -> Result<()> {
    let out = create(path)?;
    match format {
        Format::Csv => write_sweep_csv(blocks, out),
        Format::Json => write_sweep_json(blocks, out),
    }
    .map_err(|e| with_path(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig(1.0 / 3.0).to_string(), "0.333333333");
        assert_eq!(round_sig(123456.7891234).to_string(), "123456.789");
        assert_eq!(round_sig(3.0).to_string(), "3");
        assert_eq!(round_sig(0.0), 0.0);
    }
}
