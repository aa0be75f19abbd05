//! Double sliding-window receiver.
//!
//! The outer window of `N_s` packets starts at `0, Δn, 2Δn, ...` as long as
//! it fits in the `T + n` observation. Per outer position, `n_out` sweeps move
//! an inner window of `L` packets (default 2) in steps of `n` across it. In
//! each inner window the receiver repeatedly detects candidate (start,
//! pattern) pairs on the residual, extracts LLRs treating interference as
//! Gaussian noise, runs the CRC-aided list decoder and cancels every new
//! success, until an iteration decodes nothing or `n_max` is reached.
//!
//! The residual is kept for the whole observation: every decoded packet is
//! removed from it once, so each outer window starts from the received
//! signal minus all packets decoded so far.

use crate::bits::Message;
use crate::channel::Arrival;
use crate::config::{DetectorMode, SystemConfig};
use crate::detector::{Candidate, Detector};
use crate::odma::Transmitter;
use crate::polar::SclDecoder;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Relative floor on the effective noise variance, reached only on
/// noiseless residuals.
const VARIANCE_FLOOR: f64 = 1e-12;
/// Gathered samples with mean energy below this fraction of `P_g` are
/// cancellation residue, not a packet.
const EMPTY_FRACTION: f64 = 1e-9;
/// Noiseless decodes must account for at least this share of their own energy.
const NOISELESS_MATCH: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedEntry {
    pub message: Message,
    /// Absolute start time in channel uses.
    pub start: usize,
    pub pattern_index: usize,
    pub group_power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceiverOptions {
    /// Skip an inner window whose residual is unchanged since its last run
    /// ended without new decodes. Such a rerun cannot decode anything new,
    /// so the output is identical either way.
    pub skip_unchanged: bool,
    pub trace: bool,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        ReceiverOptions {
            skip_unchanged: true,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverStats {
    pub inner_calls: u64,
    pub skipped_windows: u64,
    pub detections: u64,
    pub decode_attempts: u64,
    pub crc_passes: u64,
    /// CRC passes that reproduced an already decoded (message, start) key.
    pub duplicate_hits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub outer_start: usize,
    pub inner_start: usize,
    pub iteration: usize,
    pub candidates: usize,
    pub decodes: usize,
    pub residual_energy: f64,
}

#[derive(Clone, Debug)]
pub struct StreamOutput {
    /// Final list: decoded messages, deduplicated, sorted.
    pub messages: Vec<Message>,
    /// Decoded packets in decoding order.
    pub entries: Vec<DecodedEntry>,
    pub residual: Vec<f64>,
    pub stats: ReceiverStats,
    pub trace: Vec<TraceEvent>,
    /// Every absolute (start, pattern) pair that was ever a candidate.
    pub candidates_seen: HashSet<(usize, usize)>,
}

/// Receiver-side state for one observation.
#[derive(Clone, Debug)]
pub struct StreamState {
    pub residual: Vec<f64>,
    pub entries: Vec<DecodedEntry>,
    keys: HashSet<(Message, usize)>,
    /// Modification epoch of each length-`n` block of the residual.
    block_epoch: Vec<u64>,
    epoch: u64,
    /// Inner-window start → epoch at which it last finished without decodes.
    settled: HashMap<usize, u64>,
    pub stats: ReceiverStats,
    pub trace: Vec<TraceEvent>,
    pub candidates_seen: HashSet<(usize, usize)>,
    outer_start: usize,
}

impl StreamState {
    pub fn new(y: &[f64], packet_len: usize) -> Self {
        StreamState {
            residual: y.to_vec(),
            entries: Vec::new(),
            keys: HashSet::new(),
            block_epoch: vec![0; y.len().div_ceil(packet_len)],
            epoch: 0,
            settled: HashMap::new(),
            stats: ReceiverStats::default(),
            trace: Vec::new(),
            candidates_seen: HashSet::new(),
            outer_start: 0,
        }
    }

    pub fn is_decoded(&self, message: &Message, start: usize) -> bool {
        self.keys.contains(&(message.clone(), start))
    }
}

/// LLRs of a candidate: residual samples at the pattern's active indices,
/// scaled by `2√P_g / σ̂²` with `σ̂² = max(σ², mean(s²) − P_g)`.
pub fn extract_llrs(packet_view: &[f64], column: &[usize], group_power: f64, sigma2: f64) -> Vec<f64> {
    let samples: Vec<f64> = column.iter().map(|&j| packet_view[j]).collect();
    let mean_sq = samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64;
    let mut var = sigma2.max(mean_sq - group_power);
    if var <= VARIANCE_FLOOR * group_power {
        var = VARIANCE_FLOOR * group_power;
    }
    let scale = 2.0 * group_power.sqrt() / var;
    samples.into_iter().map(|s| scale * s).collect()
}

/// Inner-window start positions, relative to an outer window start.
pub fn inner_offsets(cfg: &SystemConfig) -> impl Iterator<Item = usize> {
    let n = cfg.packet_len;
    (0..=cfg.outer_len_packets - cfg.inner_len_packets).map(move |j| j * n)
}

/// Outer-window start positions: `0, Δn, ...` up to `T − (N_s − 1)·n`, so
/// that every start time in `[0, T)` falls in the start range of some
/// inner window.
pub fn outer_starts(cfg: &SystemConfig) -> impl Iterator<Item = usize> {
    let last = cfg.horizon - (cfg.outer_len_packets - 1) * cfg.packet_len;
    (0..=last).step_by(cfg.outer_shift_packets * cfg.packet_len)
}

pub struct Receiver<'a> {
    tx: &'a Transmitter,
    detector: Detector,
    decoder: SclDecoder,
    options: ReceiverOptions,
}

impl<'a> Receiver<'a> {
    pub fn new(tx: &'a Transmitter) -> Self {
        Self::with_options(tx, ReceiverOptions::default())
    }

    pub fn with_options(tx: &'a Transmitter, options: ReceiverOptions) -> Self {
        let cfg = tx.config();
        Receiver {
            tx,
            detector: Detector::from_config(cfg),
            decoder: SclDecoder::new(tx.code(), cfg.list_size),
            options,
        }
    }

    fn cfg(&self) -> &SystemConfig {
        self.tx.config()
    }

    pub fn detect(&self, segment: &[f64]) -> Vec<Candidate> {
        match (self.cfg().detector_mode, self.tx.preamble()) {
            (DetectorMode::PreambleCorrelation, Some(pre)) => {
                self.detector.detect_preamble(segment, self.tx.patterns(), pre)
            }
            _ => self.detector.detect_energy(segment, self.tx.patterns()),
        }
    }

    /// Tries to decode one candidate at absolute start `start`. Samples that
    /// carry no energy beyond cancellation residue are rejected undecoded.
    pub fn decode_candidate(&mut self, residual: &[f64], start: usize, pattern_index: usize) -> Option<Message> {
        let cfg = self.tx.config();
        let view = &residual[start..start + cfg.packet_len];
        let column = self.tx.patterns().column(pattern_index);
        let group_power = self.tx.group_power(pattern_index);
        let mean_sq = column.iter().map(|&j| view[j] * view[j]).sum::<f64>() / column.len() as f64;
        if mean_sq <= EMPTY_FRACTION * group_power {
            return None;
        }
        let llrs = extract_llrs(view, column, group_power, cfg.sigma2);
        let message = self.tx.message_from(pattern_index, &self.decoder.decode(&llrs)?);
        if cfg.sigma2 == 0.0 {
            // Exact zeros are erasures here, and the all-zero payload passes any
            // zero-init CRC, so a window that only grazes a packet can decode.
            let m = self.tx.modulate(&message);
            let (corr, energy) = column
                .iter()
                .zip(&m.symbols)
                .fold((0.0, 0.0), |(c, e), (&j, &x)| (c + view[j] * x, e + x * x));
            if corr < NOISELESS_MATCH * energy {
                return None;
            }
        }
        Some(message)
    }

    fn cancel(&self, state: &mut StreamState, entry: DecodedEntry) {
        let n = self.cfg().packet_len;
        let m = self.tx.modulate(&entry.message);
        self.tx.superimpose(&mut state.residual, entry.start, &m, -1.0);
        state.epoch += 1;
        let last_sample = entry.start + n - 1;
        let last_block = (last_sample / n).min(state.block_epoch.len() - 1);
        for blk in entry.start / n..=last_block {
            state.block_epoch[blk] = state.epoch;
        }
        state.keys.insert((entry.message.clone(), entry.start));
        state.entries.push(entry);
    }

    fn is_settled(&self, state: &StreamState, window_start: usize) -> bool {
        let n = self.cfg().packet_len;
        let len = self.cfg().inner_len_packets * n;
        let Some(&at) = state.settled.get(&window_start) else {
            return false;
        };
        let last_block = ((window_start + len - 1) / n).min(state.block_epoch.len() - 1);
        state.block_epoch[window_start / n..=last_block]
            .iter()
            .all(|&e| e <= at)
    }

    /// Iterative detection, decoding and cancellation in the inner window
    /// starting at absolute time `window_start`. Returns the number of new
    /// messages.
    pub fn decode_inner_window(&mut self, state: &mut StreamState, window_start: usize) -> usize {
        state.stats.inner_calls += 1;
        if self.options.skip_unchanged && self.is_settled(state, window_start) {
            state.stats.skipped_windows += 1;
            return 0;
        }
        let n = self.cfg().packet_len;
        let window_len = self.cfg().inner_len_packets * n;
        let mut total = 0;
        for iteration in 0..self.cfg().max_inner_iters {
            let candidates = self.detect(&state.residual[window_start..window_start + window_len]);
            state.stats.detections += 1;
            let mut decoded = 0;
            for c in &candidates {
                let start = window_start + c.start;
                state.candidates_seen.insert((start, c.pattern_index));
                state.stats.decode_attempts += 1;
                let Some(message) = self.decode_candidate(&state.residual, start, c.pattern_index) else {
                    continue;
                };
                state.stats.crc_passes += 1;
                if state.is_decoded(&message, start) {
                    state.stats.duplicate_hits += 1;
                    continue;
                }
                let entry = DecodedEntry {
                    message,
                    start,
                    pattern_index: c.pattern_index,
                    group_power: self.tx.group_power(c.pattern_index),
                };
                self.cancel(state, entry);
                decoded += 1;
            }
            if self.options.trace {
                let residual_energy = state.residual[window_start..window_start + window_len]
                    .iter()
                    .map(|v| v * v)
                    .sum();
                state.trace.push(TraceEvent {
                    outer_start: state.outer_start,
                    inner_start: window_start,
                    iteration,
                    candidates: candidates.len(),
                    decodes: decoded,
                    residual_energy,
                });
            }
            if decoded == 0 {
                state.settled.insert(window_start, state.epoch);
                break;
            }
            total += decoded;
        }
        total
    }

    /// One outer window position: `n_out` sweeps of the inner window.
    pub fn decode_outer_window(&mut self, state: &mut StreamState, outer_start: usize) -> usize {
        state.outer_start = outer_start;
        let offsets: Vec<usize> = inner_offsets(self.cfg()).collect();
        let mut total = 0;
        for _ in 0..self.cfg().outer_iters {
            for &off in &offsets {
                total += self.decode_inner_window(state, outer_start + off);
            }
        }
        total
    }

    /// Decodes a full observation of length `T + n`.
    pub fn decode_stream(&mut self, y: &[f64]) -> StreamOutput {
        let cfg = self.cfg().clone();
        assert_eq!(y.len(), cfg.horizon + cfg.packet_len, "observation length");
        let mut state = StreamState::new(y, cfg.packet_len);
        for outer in outer_starts(&cfg) {
            self.decode_outer_window(&mut state, outer);
        }
        let mut messages: Vec<Message> = state.entries.iter().map(|e| e.message.clone()).collect();
        messages.sort();
        messages.dedup();
        StreamOutput {
            messages,
            entries: state.entries,
            residual: state.residual,
            stats: state.stats,
            trace: state.trace,
            candidates_seen: state.candidates_seen,
        }
    }
}

/// Error counts for one realization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PupeCount {
    pub arrivals: usize,
    pub misses: usize,
}

impl PupeCount {
    /// Fraction of missed arrivals; 0 when there were no arrivals.
    pub fn pupe(&self) -> f64 {
        if self.arrivals == 0 {
            0.0
        } else {
            self.misses as f64 / self.arrivals as f64
        }
    }
}

/// Counts arrivals whose message is absent from the decoded list.
pub fn compute_pupe(list: &[Message], arrivals: &[Arrival]) -> PupeCount {
    let decoded: HashSet<&Message> = list.iter().collect();
    PupeCount {
        arrivals: arrivals.len(),
        misses: arrivals.iter().filter(|a| !decoded.contains(&a.message)).count(),
    }
}
