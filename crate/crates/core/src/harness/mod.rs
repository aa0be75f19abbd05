//! Monte Carlo driver: trials, Eb/N0 sweeps, minimum Eb/N0 search and
//! result persistence.
//!
//! Every trial derives its own RNG stream from `(master_seed, trial_index)`,
//! so results are independent of the worker count. The same trial indices
//! are reused at every Eb/N0 point (common random numbers). PUPE is pooled
//! over arrivals: `Σ misses / Σ K_{a,T}`.

mod io;
pub mod stats;

pub use io::{read_csv, write_csv, write_metadata, CsvRow};

use crate::channel::{draw_arrivals, synthesize, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::odma::Transmitter;
use crate::receiver::{compute_pupe, Receiver, ReceiverOptions, StreamOutput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::Instant;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub trial_index: u64,
    /// Realized number of arrivals `K_{a,T}`.
    pub arrivals: usize,
    /// Size of the decoded list.
    pub decoded_count: usize,
    pub misses: usize,
    pub pupe: f64,
    /// Arrivals whose (start, pattern) never appeared among the candidates.
    pub detection_misses: usize,
    /// Decoded messages that match no arrival.
    pub false_decodes: usize,
    pub decode_attempts: u64,
    pub runtime_ms: f64,
}

/// Per-trial RNG: stream `index + 1` of the master seed (stream 0 is left
/// to the system-level draws).
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index.wrapping_add(1));
    rng
}

/// Shared, immutable system for a batch of trials: configuration, code,
/// pattern matrix and preamble.
#[derive(Clone, Debug)]
pub struct System {
    tx: Transmitter,
    master_seed: u64,
}

impl System {
    pub fn new(cfg: &SystemConfig, master_seed: u64) -> Result<Self> {
        Ok(System {
            tx: Transmitter::new(cfg, master_seed)?,
            master_seed,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        self.tx.config()
    }

    pub fn transmitter(&self) -> &Transmitter {
        &self.tx
    }

    pub fn run_trial(&self, trial_index: u64) -> TrialResult {
        self.run_detailed(trial_index, ReceiverOptions::default()).result
    }

    /// Runs one trial and keeps the realization and the receiver output.
    pub fn run_detailed(&self, trial_index: u64, options: ReceiverOptions) -> TrialDetail {
        let started = Instant::now();
        let cfg = self.tx.config();
        let mut rng = trial_rng(self.master_seed, trial_index);
        let arrivals = draw_arrivals(cfg, &self.tx, &mut rng);
        let realization = synthesize(arrivals, &self.tx, cfg, &mut rng);
        let output = Receiver::with_options(&self.tx, options).decode_stream(&realization.y);
        let count = compute_pupe(&output.messages, &realization.arrivals);
        let detection_misses = realization
            .arrivals
            .iter()
            .filter(|a| !output.candidates_seen.contains(&(a.start, a.pattern_index)))
            .count();
        let truth: HashSet<_> = realization.arrivals.iter().map(|a| &a.message).collect();
        let false_decodes = output.messages.iter().filter(|m| !truth.contains(m)).count();
        let result = TrialResult {
            seed: self.master_seed,
            trial_index,
            arrivals: count.arrivals,
            decoded_count: output.messages.len(),
            misses: count.misses,
            pupe: count.pupe(),
            detection_misses,
            false_decodes,
            decode_attempts: output.stats.decode_attempts,
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        TrialDetail {
            result,
            realization,
            output,
        }
    }
}

pub struct TrialDetail {
    pub result: TrialResult,
    pub realization: ChannelRealization,
    pub output: StreamOutput,
}

/// Runs trial `trial_index` of the batch seeded by `master_seed`.
pub fn run_trial(cfg: &SystemConfig, master_seed: u64, trial_index: u64) -> Result<TrialResult> {
    Ok(System::new(cfg, master_seed)?.run_trial(trial_index))
}

pub fn run_trials(system: &System, trials: usize, exec: Execution) -> Vec<TrialResult> {
    exec.map_indexed(trials, |i| system.run_trial(i as u64))
}

/// Pooled statistics of one operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub eb_n0_db: f64,
    pub trials: usize,
    pub arrivals: u64,
    pub misses: u64,
    pub pupe: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub detection_misses: u64,
    pub false_decodes: u64,
    pub decode_attempts: u64,
}

impl PointSummary {
    pub fn from_trials(eb_n0_db: f64, results: &[TrialResult]) -> Self {
        let arrivals: u64 = results.iter().map(|r| r.arrivals as u64).sum();
        let misses: u64 = results.iter().map(|r| r.misses as u64).sum();
        let (ci_lo, ci_hi) = stats::wilson95(misses, arrivals);
        PointSummary {
            eb_n0_db,
            trials: results.len(),
            arrivals,
            misses,
            pupe: if arrivals == 0 {
                0.0
            } else {
                misses as f64 / arrivals as f64
            },
            ci_lo,
            ci_hi,
            detection_misses: results.iter().map(|r| r.detection_misses as u64).sum(),
            false_decodes: results.iter().map(|r| r.false_decodes as u64).sum(),
            decode_attempts: results.iter().map(|r| r.decode_attempts).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SystemConfig,
    pub master_seed: u64,
    pub points: Vec<PointSummary>,
    pub target_eps: Option<f64>,
}

impl SweepResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.points
            .iter()
            .map(|p| CsvRow::new(&self.config, self.master_seed, p))
            .collect()
    }
}

/// Evaluates every Eb/N0 point (sorted ascending) with `trials` trials each.
pub fn run_sweep(
    cfg: &SystemConfig,
    eb_n0_db: &[f64],
    trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    if eb_n0_db.is_empty() {
        return Err(Error::InvalidArgument("empty Eb/N0 list".into()));
    }
    let mut points_db = eb_n0_db.to_vec();
    points_db.sort_by(f64::total_cmp);
    let systems = points_db
        .iter()
        .map(|&db| System::new(&cfg.with_eb_n0(db), master_seed))
        .collect::<Result<Vec<_>>>()?;
    let flat = exec.map_indexed(systems.len() * trials, |k| {
        systems[k / trials].run_trial((k % trials) as u64)
    });
    let points = points_db
        .iter()
        .zip(flat.chunks(trials))
        .map(|(&db, results)| PointSummary::from_trials(db, results))
        .collect();
    Ok(SweepResult {
        config: cfg.clone(),
        master_seed,
        points,
        target_eps: None,
    })
}

/// `lo, lo + step, ...` up to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less)
        || step.is_nan()
        || step <= 0.0
        || !lo.is_finite()
        || !hi.is_finite()
    {
        return Err(Error::InvalidArgument(format!("bad grid {lo}:{hi}:{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    // Rounded to 1e-9 dB so that grid points print cleanly.
    Ok((0..count)
        .map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Parses `lo:hi:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(format!("grid '{spec}': {e}")))?;
    match parts[..] {
        [lo, hi, step] => grid(lo, hi, step),
        [single] => Ok(vec![single]),
        _ => Err(Error::InvalidArgument(format!("grid '{spec}' is not lo:hi:step"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinEbN0 {
    /// Smallest grid point whose upper 95% PUPE bound meets the target.
    pub eb_n0_db: Option<f64>,
    /// Points evaluated, ascending; the search stops at the first success.
    pub sweep: SweepResult,
}

/// Scans the grid upwards and returns the first point whose pooled PUPE
/// upper confidence bound is at most `eps`.
pub fn find_min_eb_n0(
    cfg: &SystemConfig,
    eps: f64,
    grid_db: &[f64],
    trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<MinEbN0> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let mut sorted = grid_db.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut points = Vec::new();
    let mut found = None;
    for db in sorted {
        let system = System::new(&cfg.with_eb_n0(db), master_seed)?;
        let point = PointSummary::from_trials(db, &run_trials(&system, trials, exec));
        let ok = point.ci_hi <= eps;
        points.push(point);
        if ok {
            found = Some(db);
            break;
        }
    }
    Ok(MinEbN0 {
        eb_n0_db: found,
        sweep: SweepResult {
            config: cfg.clone(),
            master_seed,
            points,
            target_eps: Some(eps),
        },
    })
}

/// One sweep per inner-window length (in packets).
pub fn ablate_window(
    cfg: &SystemConfig,
    inner_lens: &[usize],
    eb_n0_db: &[f64],
    trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<SweepResult>> {
    inner_lens
        .iter()
        .map(|&len| {
            let c = SystemConfig {
                inner_len_packets: len,
                ..cfg.clone()
            };
            c.validate()?;
            run_sweep(&c, eb_n0_db, trials, master_seed, exec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig {
            horizon: 5 * 2000,
            load: 2.0,
            ..SystemConfig::desk()
        }
    }

    #[test]
    fn grid_points() {
        assert_eq!(grid(2.0, 8.0, 2.0).unwrap(), vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(grid(0.0, 1.0, 0.1).unwrap().len(), 11);
        assert_eq!(grid(0.0, 1.0, 0.1).unwrap()[3], 0.3);
        assert!(grid(1.0, 0.0, 0.5).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
        assert_eq!(parse_grid("4:6:1").unwrap(), vec![4.0, 5.0, 6.0]);
        assert_eq!(parse_grid("7.5").unwrap(), vec![7.5]);
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = small();
        let a = run_trial(&cfg, 5, 3).unwrap();
        let b = run_trial(&cfg, 5, 3).unwrap();
        assert_eq!(
            TrialResult { runtime_ms: 0.0, ..a },
            TrialResult { runtime_ms: 0.0, ..b }
        );
    }

    #[test]
    fn noiseless_trial_decodes_everything() {
        let cfg = SystemConfig { sigma2: 0.0, ..small() };
        for idx in 0..3 {
            let r = run_trial(&cfg, 1, idx).unwrap();
            assert_eq!(r.misses, 0, "{r:?}");
            assert_eq!(r.false_decodes, 0);
        }
    }

    #[test]
    fn sweep_errors() {
        let cfg = small();
        assert!(matches!(
            run_sweep(&cfg, &[5.0], 0, 1, Execution::Sequential),
            Err(Error::NoTrials)
        ));
        assert!(run_sweep(&cfg, &[], 2, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn pooled_pupe_matches_raw_records() {
        let cfg = small().with_eb_n0(3.0);
        let system = System::new(&cfg, 2).unwrap();
        let results = run_trials(&system, 4, Execution::default());
        let summary = PointSummary::from_trials(3.0, &results);
        let misses: usize = results.iter().map(|r| r.misses).sum();
        let arrivals: usize = results.iter().map(|r| r.arrivals).sum();
        assert_eq!(summary.misses, misses as u64);
        assert_eq!(summary.pupe, misses as f64 / arrivals as f64);
    }

    #[test]
    fn vacuous_and_impossible_targets() {
        let cfg = small();
        let g = [3.0, 9.0];
        let r = find_min_eb_n0(&cfg, 1.0, &g, 2, 3, Execution::default()).unwrap();
        assert_eq!(r.eb_n0_db, Some(3.0));
        assert_eq!(r.sweep.points.len(), 1);
        let r = find_min_eb_n0(&cfg, 0.0, &g, 2, 3, Execution::default()).unwrap();
        assert_eq!(r.eb_n0_db, None);
        assert_eq!(r.sweep.points.len(), 2);
    }
}
