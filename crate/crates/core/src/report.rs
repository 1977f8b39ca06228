//! Machine-readable tracking reports.
//!
//! A report is a run header (configuration echo, seeds, input hashes) plus
//! one record per solver step. Two lossless on-disk forms are provided:
//!
//! - JSON: the full structure via serde.
//! - CSV: a `# header-json: {...}` comment line carrying the header,
//!   followed by a header row and one row per step. Column order:
//!   `k,t,cost,T,Tprime,L,flops,roots,ehat,V_<bus>...` with one voltage
//!   column per reported bus.
//!
//! Values are emitted with the shortest round-tripping decimal form, so a
//! run with a fixed seed and configuration reproduces its files byte for
//! byte. `T` and `T'` are written raw (no clipping) to keep downstream
//! log-scale comparisons honest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::solver::TrackStep;
use crate::Result;

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub case_path: String,
    pub case_hash: String,
    pub scenario_source: String,
    pub scenario_hash: String,
    pub slack_mode: String,
    pub mode: String,
    pub mu: f64,
    pub seed: u64,
    pub budget: usize,
    pub solver_hz: f64,
    pub data_hz: f64,
    pub lipschitz: String,
    pub n: usize,
    pub n_g: usize,
    pub p: usize,
    /// Tightest voltage bounds over the regulated buses, echoed for the run.
    pub vmin: f64,
    pub vmax: f64,
    /// External ids of the buses whose voltage magnitudes are recorded.
    pub report_buses: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub k: usize,
    /// Solver wall time, seconds.
    pub t_s: f64,
    pub cost: f64,
    /// Full infeasibility measure, raw.
    pub t_infeas: f64,
    /// Generator-and-voltage lower bound on the infeasibility, raw.
    pub t_prime: f64,
    pub l_value: f64,
    pub flops_cumulative: u64,
    pub cubic_roots_cumulative: u64,
    pub drift_estimate: f64,
    /// `|V|` for each reported bus, in header order.
    pub v_mag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub header: RunHeader,
    pub records: Vec<ReportRecord>,
}

impl TrackingReport {
    /// Assembles a report from tracking output, keeping only the voltage
    /// magnitudes of the reported buses (`bus_indices` are internal).
    pub fn assemble(header: RunHeader, steps: &[TrackStep], bus_indices: &[usize]) -> Self {
        let records = steps
            .iter()
            .map(|s| ReportRecord {
                k: s.k,
                t_s: s.solver_time,
                cost: s.metrics.cost,
                t_infeas: s.metrics.t,
                t_prime: s.metrics.t_prime,
                l_value: s.l_value,
                flops_cumulative: s.flops_cumulative,
                cubic_roots_cumulative: s.cubic_roots_cumulative,
                drift_estimate: s.drift_estimate,
                v_mag: bus_indices.iter().map(|&i| s.metrics.v_mag[i]).collect(),
            })
            .collect();
        TrackingReport { header, records }
    }

    /// Invariant check: `T' <= T` per record, cumulative flops
    /// non-decreasing, records in time order.
    pub fn check_invariants(&self) -> Result<()> {
        let mut prev_flops = 0u64;
        let mut prev_k = None;
        for r in &self.records {
            if r.t_prime > r.t_infeas {
                return Err(Error::Domain(format!(
                    "record {}: T' {} exceeds T {}",
                    r.k, r.t_prime, r.t_infeas
                )));
            }
            if r.flops_cumulative < prev_flops {
                return Err(Error::Domain(format!(
                    "record {}: cumulative flops decreased",
                    r.k
                )));
            }
            prev_flops = r.flops_cumulative;
            if let Some(pk) = prev_k {
                if r.k <= pk {
                    return Err(Error::Domain(format!("record {} out of order", r.k)));
                }
            }
            prev_k = Some(r.k);
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# header-json: ");
        out.push_str(&serde_json::to_string(&self.header).expect("header serializes"));
        out.push('\n');
        out.push_str("k,t,cost,T,Tprime,L,flops,roots,ehat");
        for id in &self.header.report_buses {
            out.push_str(&format!(",V_{id}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}",
                r.k,
                r.t_s,
                r.cost,
                r.t_infeas,
                r.t_prime,
                r.l_value,
                r.flops_cumulative,
                r.cubic_roots_cumulative,
                r.drift_estimate
            ));
            for v in &r.v_mag {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::parse("<csv>", "empty report"))?;
        let header_json = header_line
            .strip_prefix("# header-json: ")
            .ok_or_else(|| Error::parse("<csv>", "missing header comment line"))?;
        let header: RunHeader = serde_json::from_str(header_json)?;
        let column_line = lines
            .next()
            .ok_or_else(|| Error::parse("<csv>", "missing column header"))?;
        let expected_cols = 9 + header.report_buses.len();
        if column_line.split(',').count() != expected_cols {
            return Err(Error::parse("<csv>", "column header mismatch"));
        }
        let mut records = Vec::new();
        for (li, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != expected_cols {
                return Err(Error::parse_at(
                    "<csv>",
                    format!("row {}", li + 3),
                    "cell count mismatch",
                ));
            }
            let parse_f = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::parse("<csv>", format!("bad number '{s}'")))
            };
            records.push(ReportRecord {
                k: cells[0]
                    .parse()
                    .map_err(|_| Error::parse("<csv>", "bad index"))?,
                t_s: parse_f(cells[1])?,
                cost: parse_f(cells[2])?,
                t_infeas: parse_f(cells[3])?,
                t_prime: parse_f(cells[4])?,
                l_value: parse_f(cells[5])?,
                flops_cumulative: cells[6]
                    .parse()
                    .map_err(|_| Error::parse("<csv>", "bad flop count"))?,
                cubic_roots_cumulative: cells[7]
                    .parse()
                    .map_err(|_| Error::parse("<csv>", "bad root count"))?,
                drift_estimate: parse_f(cells[8])?,
                v_mag: cells[9..]
                    .iter()
                    .map(|s| parse_f(s))
                    .collect::<Result<_>>()?,
            });
        }
        Ok(TrackingReport { header, records })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv_str(&text)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Hex SHA-256 of raw bytes, for case/scenario fingerprints in run headers.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
