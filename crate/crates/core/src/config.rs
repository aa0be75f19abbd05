//! System parameters of the asynchronous ODMA scheme.
//!
//! The JSON representation uses the short symbol names (`n`, `b`, `b_p`,
//! `n_c`, `k_a`, ...) as flat keys; unknown keys are rejected.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Start-time estimation front end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    /// Preamble-free joint start/pattern search on pattern energies.
    #[serde(alias = "energy")]
    PatternEnergy,
    /// Correlation against a shared preamble, then pattern energies.
    #[serde(alias = "preamble")]
    PreambleCorrelation,
}

impl DetectorMode {
    /// Short label used in CSV output and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            DetectorMode::PatternEnergy => "energy",
            DetectorMode::PreambleCorrelation => "preamble",
        }
    }
}

/// Norm applied to the masked segment when scoring a pattern.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMetric {
    #[default]
    L1,
    L2,
}

/// How the number of arrivals is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    /// Poisson process with rate `k_a` per packet duration.
    #[default]
    Poisson,
    /// Exactly `round(k_a)` arrivals in every length-`n` block (debugging aid).
    FixedPerPacket,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Packet length in channel uses.
    #[serde(rename = "n")]
    pub packet_len: usize,
    /// Message bits per user.
    #[serde(rename = "b")]
    pub message_bits: usize,
    /// Pattern-selector bits; there are `2^b_p` patterns.
    #[serde(rename = "b_p")]
    pub pattern_bits: usize,
    /// CRC length.
    #[serde(rename = "r")]
    pub crc_len: usize,
    /// Polar block length.
    #[serde(rename = "n_c")]
    pub code_len: usize,
    /// Occupied channel uses per packet.
    #[serde(rename = "n_d")]
    pub occupied: usize,
    /// Nominal per-symbol transmit power.
    #[serde(rename = "p")]
    pub power: f64,
    pub sigma2: f64,
    /// Mean number of arrivals per packet duration.
    #[serde(rename = "k_a")]
    pub load: f64,
    /// Candidate margin over the load. Defaults to `ceil(k_a / 2)`.
    #[serde(rename = "u", default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<usize>,
    /// Outer window length in packets.
    #[serde(rename = "n_s")]
    pub outer_len_packets: usize,
    /// Outer window shift in packets.
    #[serde(rename = "delta")]
    pub outer_shift_packets: usize,
    #[serde(default = "default_inner_len")]
    pub inner_len_packets: usize,
    /// Maximum detect/decode/cancel iterations per inner window.
    #[serde(rename = "n_max")]
    pub max_inner_iters: usize,
    /// Inner-window sweeps per outer window position.
    #[serde(rename = "n_out")]
    pub outer_iters: usize,
    /// Observation horizon in channel uses; arrivals start in `[0, t)`.
    #[serde(rename = "t")]
    pub horizon: usize,
    pub list_size: usize,
    /// Power multipliers of the equally sized pattern groups.
    pub power_groups: Vec<f64>,
    pub detector_mode: DetectorMode,
    /// Preamble length, nonzero only with the correlation front end.
    #[serde(rename = "n_p", default)]
    pub preamble_len: usize,
    pub seed: u64,
    #[serde(default)]
    pub energy_metric: EnergyMetric,
    #[serde(default)]
    pub arrival_mode: ArrivalMode,
}

fn default_inner_len() -> usize {
    2
}

const MEAN_TOLERANCE: f64 = 1e-9;

/// CRC lengths with a built-in generator polynomial.
pub const SUPPORTED_CRC_LENGTHS: [usize; 4] = [6, 11, 16, 24];

impl SystemConfig {
    /// Full-size profile: `n = 10000`, `B = 100`, 16 patterns, length-512
    /// polar code with CRC-16, list 32, `n_max = 50`, `n_out = 10`,
    /// `N_s = 5`, `Δ = 1`. `P` is set for 10 dB.
    pub fn full() -> Self {
        let mut cfg = SystemConfig {
            packet_len: 10_000,
            message_bits: 100,
            pattern_bits: 4,
            crc_len: 16,
            code_len: 512,
            occupied: 512,
            power: 1.0,
            sigma2: 1.0,
            load: 75.0,
            margin: None,
            outer_len_packets: 5,
            outer_shift_packets: 1,
            inner_len_packets: 2,
            max_inner_iters: 50,
            outer_iters: 10,
            horizon: 20 * 10_000,
            list_size: 32,
            power_groups: vec![1.5, 0.5],
            detector_mode: DetectorMode::PatternEnergy,
            preamble_len: 0,
            seed: 0,
            energy_metric: EnergyMetric::L1,
            arrival_mode: ArrivalMode::Poisson,
        };
        cfg.power = cfg.power_for_eb_n0(10.0);
        cfg
    }

    /// Reduced profile used by the test suites: `n = 2000`, length-256 code,
    /// `T = 10n`, `K_a = 5`. `P` is set for 8 dB.
    pub fn desk() -> Self {
        let mut cfg = SystemConfig {
            packet_len: 2000,
            code_len: 256,
            occupied: 256,
            load: 5.0,
            horizon: 10 * 2000,
            ..Self::full()
        };
        cfg.power = cfg.power_for_eb_n0(8.0);
        cfg
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn num_patterns(&self) -> usize {
        1 << self.pattern_bits
    }

    pub fn payload_bits(&self) -> usize {
        self.message_bits.saturating_sub(self.pattern_bits)
    }

    /// Polar information length including the CRC.
    pub fn info_len(&self) -> usize {
        self.payload_bits() + self.crc_len
    }

    pub fn margin(&self) -> usize {
        self.margin.unwrap_or_else(|| (self.load / 2.0).ceil() as usize)
    }

    /// Number of candidate start offsets tested in one inner window.
    pub fn start_range(&self) -> usize {
        (self.inner_len_packets - 1) * self.packet_len
    }

    /// Candidates kept per detection: expected arrivals in the start range
    /// (rounded) plus the margin.
    pub fn candidates_per_detection(&self) -> usize {
        let expected = self.load * (self.inner_len_packets - 1) as f64;
        expected.round() as usize + self.margin()
    }

    /// Preamble length actually transmitted.
    pub fn active_preamble_len(&self) -> usize {
        match self.detector_mode {
            DetectorMode::PatternEnergy => 0,
            DetectorMode::PreambleCorrelation => self.preamble_len,
        }
    }

    /// Mean transmitted energy per packet in units of `P`: data symbols plus
    /// the preamble when one is sent.
    fn energy_units(&self) -> f64 {
        (self.occupied + self.active_preamble_len()) as f64
    }

    /// Energy per bit in dB. Infinite for a noiseless channel.
    pub fn eb_n0_db(&self) -> f64 {
        let ratio = self.energy_units() * self.power / (2.0 * self.message_bits as f64 * self.sigma2);
        10.0 * ratio.log10()
    }

    /// Per-symbol power giving the requested Eb/N0; exact inverse of
    /// [`SystemConfig::eb_n0_db`].
    pub fn power_for_eb_n0(&self, eb_n0_db: f64) -> f64 {
        10f64.powf(eb_n0_db / 10.0) * 2.0 * self.message_bits as f64 * self.sigma2 / self.energy_units()
    }

    pub fn with_eb_n0(&self, eb_n0_db: f64) -> Self {
        SystemConfig {
            power: self.power_for_eb_n0(eb_n0_db),
            ..self.clone()
        }
    }

    /// Switches the start-time front end, keeping the preamble length
    /// consistent with it (`default_preamble` when enabling the preamble).
    pub fn with_detector(&self, mode: DetectorMode, default_preamble: usize) -> Self {
        let preamble_len = match mode {
            DetectorMode::PatternEnergy => 0,
            DetectorMode::PreambleCorrelation if self.preamble_len > 0 => self.preamble_len,
            DetectorMode::PreambleCorrelation => default_preamble,
        };
        SystemConfig {
            detector_mode: mode,
            preamble_len,
            ..self.clone()
        }
    }

    /// Checks every parameter invariant and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.packet_len == 0 {
            return fail("packet length n must be positive".into());
        }
        if self.message_bits == 0 {
            return fail("message length b must be positive".into());
        }
        if self.pattern_bits >= self.message_bits {
            return fail(format!(
                "payload empty: b_p = {} leaves no payload bits of b = {}",
                self.pattern_bits, self.message_bits
            ));
        }
        if self.pattern_bits >= usize::BITS as usize - 1 {
            return fail(format!("b_p = {} is too large", self.pattern_bits));
        }
        if !SUPPORTED_CRC_LENGTHS.contains(&self.crc_len) {
            return fail(format!(
                "unsupported crc length r = {} (supported: {:?})",
                self.crc_len, SUPPORTED_CRC_LENGTHS
            ));
        }
        if !self.code_len.is_power_of_two() || self.code_len < 2 {
            return fail(format!("polar length n_c = {} is not a power of two", self.code_len));
        }
        if self.code_len > 1024 {
            return fail(format!("polar length n_c = {} exceeds 1024", self.code_len));
        }
        if self.info_len() > self.code_len {
            return fail(format!(
                "polar overload: b_c + r = {} exceeds n_c = {}",
                self.info_len(),
                self.code_len
            ));
        }
        if self.occupied != self.code_len {
            return fail(format!(
                "n_d = {} must equal n_c = {} for BPSK",
                self.occupied, self.code_len
            ));
        }
        if self.occupied + self.preamble_len > self.packet_len {
            return fail(format!(
                "packet overflow: n_d + n_p = {} exceeds n = {}",
                self.occupied + self.preamble_len,
                self.packet_len
            ));
        }
        match self.detector_mode {
            DetectorMode::PatternEnergy if self.preamble_len != 0 => {
                return fail("n_p must be 0 with the pattern-energy detector".into());
            }
            DetectorMode::PreambleCorrelation if self.preamble_len == 0 => {
                return fail("preamble correlation requires n_p > 0".into());
            }
            _ => {}
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return fail(format!("power p = {} must be positive", self.power));
        }
        // sigma2 = 0 is accepted as a noiseless test channel.
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return fail(format!("sigma2 = {} must be non-negative", self.sigma2));
        }
        if !(self.load.is_finite() && self.load >= 0.0) {
            return fail(format!("load k_a = {} must be non-negative", self.load));
        }
        if self.outer_len_packets < 2 {
            return fail(format!("n_s = {} must be at least 2", self.outer_len_packets));
        }
        if self.outer_shift_packets == 0 {
            return fail("outer shift delta must be positive".into());
        }
        if self.inner_len_packets < 2 || self.inner_len_packets > self.outer_len_packets {
            return fail(format!(
                "inner window of {} packets must lie in [2, n_s = {}]",
                self.inner_len_packets, self.outer_len_packets
            ));
        }
        if self.max_inner_iters == 0 || self.outer_iters == 0 {
            return fail("n_max and n_out must be positive".into());
        }
        if self.horizon == 0 || !self.horizon.is_multiple_of(self.packet_len) {
            return fail(format!(
                "horizon t = {} must be a positive multiple of n = {}",
                self.horizon, self.packet_len
            ));
        }
        if self.horizon < (self.outer_len_packets - 1) * self.packet_len {
            return fail(format!("horizon t = {} is shorter than one outer window", self.horizon));
        }
        if self.list_size == 0 {
            return fail("list size must be positive".into());
        }
        if self.power_groups.is_empty() {
            return fail("power_groups must not be empty".into());
        }
        if self.power_groups.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
            return fail("power_groups multipliers must be positive".into());
        }
        if !self.num_patterns().is_multiple_of(self.power_groups.len()) {
            return fail(format!(
                "{} power groups do not divide {} patterns",
                self.power_groups.len(),
                self.num_patterns()
            ));
        }
        let mean = self.power_groups.iter().sum::<f64>() / self.power_groups.len() as f64;
        if (mean - 1.0).abs() > MEAN_TOLERANCE {
            return fail(format!("power groups mean ≠ 1 (mean = {mean})"));
        }
        Ok(())
    }
}
