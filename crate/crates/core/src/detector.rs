//! Joint start-time and pattern estimation inside an inner window.
//!
//! For every candidate start `b` and pattern `i` the energy metric is the
//! norm of the length-`n` segment starting at `b` restricted to the active
//! indices of pattern `i` (l1 by default). The best pattern at each `b` is
//! that start's survivor; the strongest survivors become candidates. The
//! baseline front end ranks starts by preamble correlation instead and then
//! picks the pattern with the energy metric.

use crate::config::{EnergyMetric, SystemConfig};
use crate::error::Result;
use crate::odma::{PatternMatrix, Preamble};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Start offset relative to the inner window.
    pub start: usize,
    pub pattern_index: usize,
    /// Energy metric or preamble correlation, depending on the front end.
    pub score: f64,
}

/// Energy metric of one pattern on a segment starting at the pattern origin.
pub fn pattern_energy(segment: &[f64], column: &[usize], metric: EnergyMetric) -> f64 {
    match metric {
        EnergyMetric::L1 => column.iter().map(|&j| segment[j].abs()).sum(),
        EnergyMetric::L2 => column.iter().map(|&j| segment[j] * segment[j]).sum::<f64>().sqrt(),
    }
}

/// Correlation of the first `n_p` samples of `segment` with the preamble.
pub fn preamble_correlate(segment: &[f64], preamble: &Preamble) -> f64 {
    segment.iter().zip(preamble.samples()).map(|(y, a)| y * a).sum()
}

/// Energy metric for every (pattern, start) pair, pattern-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    starts: usize,
    patterns: usize,
    scores: Vec<f64>,
}

impl ScoreTable {
    /// Scores starts `0..starts` on `segment`, which must extend at least
    /// `starts - 1 + n` samples. Each entry accumulates the active indices in
    /// increasing order.
    pub fn compute(segment: &[f64], patterns: &PatternMatrix, starts: usize, metric: EnergyMetric) -> Self {
        assert!(
            segment.len() + 1 >= starts + patterns.packet_len(),
            "segment too short for {starts} starts"
        );
        let magnitude: Vec<f64> = match metric {
            EnergyMetric::L1 => segment.iter().map(|v| v.abs()).collect(),
            EnergyMetric::L2 => segment.iter().map(|v| v * v).collect(),
        };
        let m = patterns.num_patterns();
        let mut scores = vec![0.0; m * starts];
        for (row, col) in scores.chunks_mut(starts).zip(patterns.columns()) {
            // Four indices per pass; each entry still adds them one by one
            // in increasing order.
            let mut quads = col.chunks_exact(4);
            for q in &mut quads {
                let (a, b) = (&magnitude[q[0]..q[0] + starts], &magnitude[q[1]..q[1] + starts]);
                let (c, d) = (&magnitude[q[2]..q[2] + starts], &magnitude[q[3]..q[3] + starts]);
                for k in 0..starts {
                    row[k] = row[k] + a[k] + b[k] + c[k] + d[k];
                }
            }
            for &idx in quads.remainder() {
                for (acc, &v) in row.iter_mut().zip(&magnitude[idx..idx + starts]) {
                    *acc += v;
                }
            }
        }
        if metric == EnergyMetric::L2 {
            scores.iter_mut().for_each(|s| *s = s.sqrt());
        }
        ScoreTable {
            starts,
            patterns: m,
            scores,
        }
    }

    pub fn starts(&self) -> usize {
        self.starts
    }

    pub fn num_patterns(&self) -> usize {
        self.patterns
    }

    pub fn get(&self, pattern: usize, start: usize) -> f64 {
        self.scores[pattern * self.starts + start]
    }

    /// Best pattern at `start`, lowest index on ties.
    pub fn survivor(&self, start: usize) -> Candidate {
        let mut best = Candidate {
            start,
            pattern_index: 0,
            score: self.get(0, start),
        };
        for i in 1..self.patterns {
            let s = self.get(i, start);
            if s > best.score {
                best.pattern_index = i;
                best.score = s;
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "i", "score"])?;
        for b in 0..self.starts {
            for i in 0..self.patterns {
                w.serialize((b, i, self.get(i, b)))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Descending score, then smaller start, then smaller pattern.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.start.cmp(&b.start))
        .then(a.pattern_index.cmp(&b.pattern_index))
}

fn top(mut all: Vec<Candidate>, count: usize) -> Vec<Candidate> {
    all.sort_by(rank);
    all.truncate(count);
    all
}

/// Front-end parameters derived from the configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detector {
    /// Number of candidate start offsets per inner window.
    pub starts: usize,
    /// Candidates returned per detection.
    pub count: usize,
    pub metric: EnergyMetric,
}

impl Detector {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Detector {
            starts: cfg.start_range(),
            count: cfg.candidates_per_detection(),
            metric: cfg.energy_metric,
        }
    }

    /// Preamble-free estimation: the `count` strongest survivors.
    pub fn detect_energy(&self, segment: &[f64], patterns: &PatternMatrix) -> Vec<Candidate> {
        let table = ScoreTable::compute(segment, patterns, self.starts, self.metric);
        self.select_survivors(&table)
    }

    pub fn select_survivors(&self, table: &ScoreTable) -> Vec<Candidate> {
        top((0..table.starts()).map(|b| table.survivor(b)).collect(), self.count)
    }

    /// Preamble baseline: the `count` starts with the largest correlation,
    /// each paired with its best pattern by the energy metric.
    pub fn detect_preamble(&self, segment: &[f64], patterns: &PatternMatrix, preamble: &Preamble) -> Vec<Candidate> {
        let n = patterns.packet_len();
        let ranked = top(
            (0..self.starts)
                .map(|b| Candidate {
                    start: b,
                    pattern_index: 0,
                    score: preamble_correlate(&segment[b..b + n], preamble),
                })
                .collect(),
            self.count,
        );
        ranked
            .into_iter()
            .map(|mut c| {
                let seg = &segment[c.start..c.start + n];
                let mut best = f64::NEG_INFINITY;
                for (i, col) in patterns.columns().iter().enumerate() {
                    let e = pattern_energy(seg, col, self.metric);
                    if e > best {
                        best = e;
                        c.pattern_index = i;
                    }
                }
                c
            })
            .collect()
    }
}
