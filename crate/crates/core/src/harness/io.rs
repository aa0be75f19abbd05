use super::{PointSummary, SweepResult};
use crate::config::SystemConfig;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One line of the results CSV. Field order defines the header:
/// `eb_n0_db,ka,n,n_c,inner_len,detector,trials,arrivals,misses,pupe,ci_lo,ci_hi,seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub eb_n0_db: f64,
    pub ka: f64,
    pub n: usize,
    pub n_c: usize,
    /// Inner window length in packets.
    pub inner_len: usize,
    pub detector: String,
    pub trials: usize,
    pub arrivals: u64,
    pub misses: u64,
    pub pupe: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "eb_n0_db,ka,n,n_c,inner_len,detector,trials,arrivals,misses,pupe,ci_lo,ci_hi,seed";

impl CsvRow {
    pub fn new(cfg: &SystemConfig, seed: u64, p: &PointSummary) -> Self {
        CsvRow {
            eb_n0_db: p.eb_n0_db,
            ka: cfg.load,
            n: cfg.packet_len,
            n_c: cfg.code_len,
            inner_len: cfg.inner_len_packets,
            detector: cfg.detector_mode.label().to_string(),
            trials: p.trials,
            arrivals: p.arrivals,
            misses: p.misses,
            pupe: p.pupe,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
            seed,
        }
    }
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// JSON sidecar with the configuration snapshot and per-point diagnostics.
pub fn write_metadata(path: impl AsRef<Path>, sweeps: &[SweepResult]) -> Result<()> {
    let meta = serde_json::json!({
        "pupe_aggregation": "pooled over arrivals: sum(misses) / sum(arrivals); trials without arrivals contribute nothing",
        "confidence_interval": "wilson 95%",
        "sweeps": sweeps,
    });
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
