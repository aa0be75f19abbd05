//! On-off division multiple access transmitter.
//!
//! A message of `B` bits selects its pattern with the first `B_p` bits
//! (big-endian); the remaining `B_c` bits get a CRC, are polar encoded, BPSK
//! mapped (`0 → +√P_g`, `1 → −√P_g`) and scattered over the pattern's active
//! indices in increasing order. Patterns are split into equally sized groups
//! with their own power multiplier.

use crate::bits::{self, Message};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::polar::{Crc, PolarCode};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RNG stream ids derived from one seed.
const PATTERN_STREAM: u64 = 0x5041_5454;
const PREAMBLE_STREAM: u64 = 0x5052_4541;

/// Shared on-off patterns: `M_p` columns, each a sorted list of `n_d` active
/// indices within a length-`n` packet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternMatrix {
    packet_len: usize,
    columns: Vec<Vec<usize>>,
    seed: Option<u64>,
}

impl PatternMatrix {
    /// Draws `count` independent uniformly random `weight`-subsets of
    /// `[offset, packet_len)`.
    pub fn random(packet_len: usize, weight: usize, count: usize, offset: usize, seed: u64) -> Result<Self> {
        if offset > packet_len || weight > packet_len - offset {
            return Err(Error::InfeasiblePatterns(format!(
                "weight {weight} does not fit in [{offset}, {packet_len})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PATTERN_STREAM);
        let columns = (0..count)
            .map(|_| {
                let mut col: Vec<usize> = sample(&mut rng, packet_len - offset, weight)
                    .into_iter()
                    .map(|i| i + offset)
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        Ok(PatternMatrix {
            packet_len,
            columns,
            seed: Some(seed),
        })
    }

    pub fn generate(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        Self::random(
            cfg.packet_len,
            cfg.occupied,
            cfg.num_patterns(),
            cfg.active_preamble_len(),
            seed,
        )
    }

    pub fn from_columns(packet_len: usize, columns: Vec<Vec<usize>>) -> Result<Self> {
        let weight = columns.first().map_or(0, Vec::len);
        for (i, col) in columns.iter().enumerate() {
            if col.len() != weight {
                return Err(Error::InfeasiblePatterns(format!(
                    "column {i} has weight {} instead of {weight}",
                    col.len()
                )));
            }
            if !col.windows(2).all(|w| w[0] < w[1]) || col.last().is_some_and(|&l| l >= packet_len) {
                return Err(Error::InfeasiblePatterns(format!(
                    "column {i} is not a sorted index set within [0, {packet_len})"
                )));
            }
        }
        Ok(PatternMatrix {
            packet_len,
            columns,
            seed: None,
        })
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    pub fn num_patterns(&self) -> usize {
        self.columns.len()
    }

    pub fn weight(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, i: usize) -> &[usize] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Column `i` as a dense 0/1 mask.
    pub fn mask(&self, i: usize) -> Vec<u8> {
        let mut m = vec![0; self.packet_len];
        for &j in &self.columns[i] {
            m[j] = 1;
        }
        m
    }

    /// JSON list of index lists.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.columns).expect("index lists serialize")
    }

    pub fn from_json(packet_len: usize, json: &str) -> Result<Self> {
        Self::from_columns(packet_len, serde_json::from_str(json)?)
    }
}

/// Shared preamble of i.i.d. equiprobable `±√P` samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Preamble {
    samples: Vec<f64>,
}

impl Preamble {
    pub fn generate(len: usize, power: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PREAMBLE_STREAM);
        let amp = power.sqrt();
        Preamble {
            samples: (0..len)
                .map(|_| if rng.random::<bool>() { amp } else { -amp })
                .collect(),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }
}

/// Pattern index carried by the first `pattern_bits` bits.
pub fn pattern_index_of(msg: &Message, pattern_bits: usize) -> usize {
    bits::to_index(&msg.bits()[..pattern_bits])
}

/// Per-symbol power of a user on pattern `pattern_index`.
pub fn group_power(pattern_index: usize, cfg: &SystemConfig) -> f64 {
    let groups = &cfg.power_groups;
    let per_group = cfg.num_patterns() / groups.len();
    cfg.power * groups[pattern_index / per_group]
}

/// Codeword symbols of one user, in pattern order.
#[derive(Clone, Debug, PartialEq)]
pub struct Modulated {
    pub pattern_index: usize,
    pub group_power: f64,
    pub symbols: Vec<f64>,
}

/// A dense length-`n` transmit packet.
#[derive(Clone, Debug, PartialEq)]
pub struct TxPacket {
    pub samples: Vec<f64>,
    pub pattern_index: usize,
    pub group_power: f64,
    pub message: Message,
}

/// Everything a user (and the receiver, for re-encoding) needs to map a
/// message onto the channel.
#[derive(Clone, Debug)]
pub struct Transmitter {
    cfg: SystemConfig,
    code: PolarCode,
    patterns: PatternMatrix,
    preamble: Option<Preamble>,
}

impl Transmitter {
    /// Builds the code, the pattern matrix and (in preamble mode) the
    /// preamble, all derived from `seed`.
    pub fn new(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let code = PolarCode::construct(cfg.code_len, cfg.info_len(), Crc::for_length(cfg.crc_len)?)?;
        let patterns = PatternMatrix::generate(cfg, seed)?;
        Self::with_patterns(cfg, code, patterns, seed)
    }

    pub fn with_patterns(cfg: &SystemConfig, code: PolarCode, patterns: PatternMatrix, seed: u64) -> Result<Self> {
        if patterns.num_patterns() != cfg.num_patterns()
            || patterns.weight() != cfg.occupied
            || patterns.packet_len() != cfg.packet_len
        {
            return Err(Error::InfeasiblePatterns(
                "pattern matrix does not match configuration".into(),
            ));
        }
        let n_p = cfg.active_preamble_len();
        if patterns.columns().iter().any(|c| c.first().is_some_and(|&i| i < n_p)) {
            return Err(Error::InfeasiblePatterns("patterns overlap the preamble region".into()));
        }
        let preamble = (n_p > 0).then(|| Preamble::generate(n_p, cfg.power, seed));
        Ok(Transmitter {
            cfg: cfg.clone(),
            code,
            patterns,
            preamble,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn patterns(&self) -> &PatternMatrix {
        &self.patterns
    }

    pub fn preamble(&self) -> Option<&Preamble> {
        self.preamble.as_ref()
    }

    pub fn pattern_index_of(&self, msg: &Message) -> usize {
        pattern_index_of(msg, self.cfg.pattern_bits)
    }

    pub fn group_power(&self, pattern_index: usize) -> f64 {
        group_power(pattern_index, &self.cfg)
    }

    /// Rebuilds the full message from a detected pattern and a decoded payload.
    pub fn message_from(&self, pattern_index: usize, payload: &[u8]) -> Message {
        Message::join(&bits::from_index(pattern_index, self.cfg.pattern_bits), payload)
    }

    pub fn modulate(&self, msg: &Message) -> Modulated {
        assert_eq!(msg.len(), self.cfg.message_bits, "message length");
        let pattern_index = self.pattern_index_of(msg);
        let group_power = self.group_power(pattern_index);
        let amp = group_power.sqrt();
        let codeword = self.code.encode_payload(&msg.bits()[self.cfg.pattern_bits..]);
        let symbols = codeword.iter().map(|&c| if c == 0 { amp } else { -amp }).collect();
        Modulated {
            pattern_index,
            group_power,
            symbols,
        }
    }

    /// Adds `scale` times the packet starting at `start` into `signal`.
    /// Samples falling beyond the end of `signal` are dropped.
    pub fn superimpose(&self, signal: &mut [f64], start: usize, packet: &Modulated, scale: f64) {
        let end = signal.len();
        if let Some(pre) = &self.preamble {
            for (j, &a) in pre.samples().iter().enumerate() {
                if start + j < end {
                    signal[start + j] += scale * a;
                }
            }
        }
        for (&idx, &s) in self.patterns.column(packet.pattern_index).iter().zip(&packet.symbols) {
            if start + idx < end {
                signal[start + idx] += scale * s;
            }
        }
    }

    pub fn build_packet(&self, msg: &Message) -> TxPacket {
        let m = self.modulate(msg);
        let mut samples = vec![0.0; self.cfg.packet_len];
        self.superimpose(&mut samples, 0, &m, 1.0);
        TxPacket {
            samples,
            pattern_index: m.pattern_index,
            group_power: m.group_power,
            message: msg.clone(),
        }
    }
}
