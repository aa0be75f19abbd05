//! Frame-asynchronous, symbol-synchronous real Gaussian multiple access
//! channel observed over `[0, T + n)`.

use crate::bits::Message;
use crate::config::{ArrivalMode, SystemConfig};
use crate::error::Result;
use crate::odma::Transmitter;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub message: Message,
    /// Transmission start in channel uses, in `[0, T)`.
    pub start: usize,
    pub pattern_index: usize,
    pub group_power: f64,
}

#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// Received signal of length `T + n`.
    pub y: Vec<f64>,
    /// Ground truth, hidden from the receiver.
    pub arrivals: Vec<Arrival>,
    pub sigma2: f64,
}

/// Draws user arrivals over `[0, T)`: a Poisson count with mean `K_a·T/n`
/// (or exactly `round(K_a)` per length-`n` block), uniform integer starts
/// and uniform messages. Arrivals are returned sorted by start time.
pub fn draw_arrivals<R: Rng + ?Sized>(cfg: &SystemConfig, tx: &Transmitter, rng: &mut R) -> Vec<Arrival> {
    let n = cfg.packet_len;
    let t = cfg.horizon;
    let mut starts: Vec<usize> = match cfg.arrival_mode {
        ArrivalMode::Poisson => {
            let mean = cfg.load * (t / n) as f64;
            let count = if mean > 0.0 {
                Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize
            } else {
                0
            };
            (0..count).map(|_| rng.random_range(0..t)).collect()
        }
        ArrivalMode::FixedPerPacket => {
            let per_block = cfg.load.round() as usize;
            (0..t / n)
                .flat_map(|blk| (0..per_block).map(move |_| blk))
                .map(|blk| blk * n + rng.random_range(0..n))
                .collect()
        }
    };
    starts.sort_unstable();
    starts
        .into_iter()
        .map(|start| {
            let message = Message::random(cfg.message_bits, rng);
            let pattern_index = tx.pattern_index_of(&message);
            Arrival {
                group_power: tx.group_power(pattern_index),
                message,
                start,
                pattern_index,
            }
        })
        .collect()
}

/// Superimposes every arrival at its offset and adds white Gaussian noise.
pub fn synthesize<R: Rng + ?Sized>(
    arrivals: Vec<Arrival>,
    tx: &Transmitter,
    cfg: &SystemConfig,
    rng: &mut R,
) -> ChannelRealization {
    let mut y = vec![0.0; cfg.horizon + cfg.packet_len];
    for a in &arrivals {
        tx.superimpose(&mut y, a.start, &tx.modulate(&a.message), 1.0);
    }
    if cfg.sigma2 > 0.0 {
        let sigma = cfg.sigma2.sqrt();
        for v in y.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += sigma * z;
        }
    }
    ChannelRealization {
        y,
        arrivals,
        sigma2: cfg.sigma2,
    }
}

impl ChannelRealization {
    /// Writes `y` as little-endian `f64` samples to `bin` and the ground
    /// truth as JSON to `sidecar`.
    pub fn write_dump(&self, bin: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(bin)?);
        for v in &self.y {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        let meta = serde_json::json!({
            "samples": self.y.len(),
            "sigma2": self.sigma2,
            "arrivals": self.arrivals,
        });
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_samples(bin: impl AsRef<Path>) -> Result<Vec<f64>> {
        let raw = std::fs::read(bin)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(load: f64, sigma2: f64) -> (SystemConfig, Transmitter) {
        let cfg = SystemConfig {
            load,
            sigma2,
            ..SystemConfig::desk()
        };
        let tx = Transmitter::new(&cfg, 1).unwrap();
        (cfg, tx)
    }

    #[test]
    fn zero_load_gives_no_arrivals() {
        let (cfg, tx) = setup(0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert!(draw_arrivals(&cfg, &tx, &mut rng).is_empty());
        }
    }

    #[test]
    fn poisson_count_mean() {
        let (cfg, tx) = setup(75.0, 1.0);
        let seeds = 200;
        let total: usize = (0..seeds)
            .map(|s| {
                let arrivals = draw_arrivals(&cfg, &tx, &mut ChaCha8Rng::seed_from_u64(s));
                assert!(arrivals.iter().all(|a| a.start < cfg.horizon));
                arrivals.len()
            })
            .sum();
        let mean = total as f64 / seeds as f64;
        // Poisson(750): sd of the mean over 200 draws is sqrt(750/200).
        let sd = (750.0f64 / seeds as f64).sqrt();
        assert!((mean - 750.0).abs() < 3.0 * sd, "{mean}");
    }

    #[test]
    fn fixed_mode_counts_per_block() {
        let (mut cfg, tx) = setup(3.0, 1.0);
        cfg.arrival_mode = ArrivalMode::FixedPerPacket;
        let arrivals = draw_arrivals(&cfg, &tx, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(arrivals.len(), 30);
        for blk in 0..10 {
            let c = arrivals.iter().filter(|a| a.start / 2000 == blk).count();
            assert_eq!(c, 3);
        }
    }

    #[test]
    fn noise_only_variance() {
        let (cfg, tx) = setup(0.0, 1.0);
        let mut cfg = cfg;
        cfg.horizon = 29 * 2000;
        let r = synthesize(vec![], &tx, &cfg, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(r.y.len(), 60_000);
        let var = r.y.iter().map(|v| v * v).sum::<f64>() / r.y.len() as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn single_clean_packet() {
        let (cfg, tx) = setup(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let msg = Message::random(100, &mut rng);
        let pi = tx.pattern_index_of(&msg);
        let arrival = Arrival {
            message: msg.clone(),
            start: 777,
            pattern_index: pi,
            group_power: tx.group_power(pi),
        };
        let r = synthesize(vec![arrival.clone()], &tx, &cfg, &mut rng);
        let pkt = tx.build_packet(&msg);
        assert_eq!(&r.y[777..777 + 2000], &pkt.samples[..]);
        assert!(r.y[..777].iter().chain(&r.y[2777..]).all(|&v| v == 0.0));
        let energy: f64 = r.y.iter().map(|v| v * v).sum();
        assert!((energy - 256.0 * arrival.group_power).abs() < 1e-9 * energy);
    }

    #[test]
    fn superposition_matches_direct_sum() {
        let (cfg, tx) = setup(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m1 = Message::random(100, &mut rng).bits().to_vec();
        let mut m2 = Message::random(100, &mut rng).bits().to_vec();
        m1[..4].copy_from_slice(&[0, 1, 1, 0]);
        m2[..4].copy_from_slice(&[0, 1, 1, 0]);
        let arrivals: Vec<Arrival> = [(m1, 100), (m2, 101)]
            .into_iter()
            .map(|(bits, start)| {
                let message = Message::from_bits(bits);
                Arrival {
                    pattern_index: 6,
                    group_power: tx.group_power(6),
                    message,
                    start,
                }
            })
            .collect();
        let r = synthesize(arrivals.clone(), &tx, &cfg, &mut rng);
        let mut direct = vec![0.0; cfg.horizon + cfg.packet_len];
        for a in &arrivals {
            let pkt = tx.build_packet(&a.message);
            for (j, s) in pkt.samples.iter().enumerate() {
                direct[a.start + j] += s;
            }
        }
        assert_eq!(r.y, direct);
    }

    #[test]
    fn linear_and_reproducible() {
        let (cfg, tx) = setup(3.0, 0.0);
        let all = draw_arrivals(&cfg, &tx, &mut ChaCha8Rng::seed_from_u64(5));
        let (a, b) = all.split_at(all.len() / 2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ya = synthesize(a.to_vec(), &tx, &cfg, &mut rng).y;
        let yb = synthesize(b.to_vec(), &tx, &cfg, &mut rng).y;
        let yab = synthesize(all.clone(), &tx, &cfg, &mut rng).y;
        for i in 0..yab.len() {
            assert!((yab[i] - ya[i] - yb[i]).abs() < 1e-12);
        }

        let (noisy, tx) = setup(3.0, 1.0);
        let r1 = synthesize(all.clone(), &tx, &noisy, &mut ChaCha8Rng::seed_from_u64(9));
        let r2 = synthesize(all, &tx, &noisy, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(r1.y, r2.y);
    }

    #[test]
    fn expected_energy() {
        let (cfg, tx) = setup(5.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut measured, mut expected) = (0.0, 0.0);
        for _ in 0..20 {
            let arrivals = draw_arrivals(&cfg, &tx, &mut rng);
            expected += arrivals.iter().map(|a| 256.0 * a.group_power).sum::<f64>()
                + (cfg.horizon + cfg.packet_len) as f64 * cfg.sigma2;
            let r = synthesize(arrivals, &tx, &cfg, &mut rng);
            measured += r.y.iter().map(|v| v * v).sum::<f64>();
        }
        assert!((measured / expected - 1.0).abs() < 0.02);
    }

    #[test]
    fn dump_round_trip() {
        let (cfg, tx) = setup(2.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let arrivals = draw_arrivals(&cfg, &tx, &mut rng);
        let r = synthesize(arrivals, &tx, &cfg, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("y.bin");
        let json = dir.path().join("y.json");
        r.write_dump(&bin, &json).unwrap();
        assert_eq!(ChannelRealization::read_samples(&bin).unwrap(), r.y);
        let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(meta["arrivals"].as_array().unwrap().len(), r.arrivals.len());
    }
}
