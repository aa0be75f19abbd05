use odma_ura::bits::{from_index, to_index};
use odma_ura::channel::{draw_arrivals, synthesize, ChannelRealization};
use odma_ura::harness::{find_min_eb_n0, grid, run_sweep, stats::wilson95};
use odma_ura::odma::Transmitter;
use odma_ura::polar::{Crc, PolarCode, SclDecoder};
use odma_ura::receiver::Receiver;
use odma_ura::{Execution, Message, SystemConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn desk(load: f64) -> SystemConfig {
    SystemConfig {
        load,
        ..SystemConfig::desk()
    }
}

/// Block error rate of the 256/112 code on BPSK-AWGN at `es_n0_db`.
fn bler(list: usize, es_n0_db: f64, blocks: usize, seed: u64) -> f64 {
    let code = PolarCode::construct(256, 112, Crc::CCITT16).unwrap();
    let mut dec = SclDecoder::new(&code, list);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = 10f64.powf(-es_n0_db / 20.0);
    let mut errors = 0;
    for _ in 0..blocks {
        let payload: Vec<u8> = (0..96).map(|_| rng.random::<bool>() as u8).collect();
        let llrs: Vec<f64> = code
            .encode_payload(&payload)
            .iter()
            .map(|&c| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let y = if c == 0 { 1.0 } else { -1.0 } + sigma * noise;
                2.0 * y / (sigma * sigma)
            })
            .collect();
        errors += (dec.decode(&llrs).as_deref() != Some(&payload[..])) as usize;
    }
    errors as f64 / blocks as f64
}

#[test]
fn bler_falls_with_snr() {
    let curve: Vec<f64> = [-1.0, 0.5, 2.0].iter().map(|&s| bler(8, s, 400, 1)).collect();
    assert!(curve[0] > curve[1] && curve[1] > curve[2], "{curve:?}");
    assert!(curve[0] > 0.2, "{curve:?}");
}

#[test]
fn larger_list_helps() {
    let l1 = bler(1, 0.5, 400, 2);
    let l32 = bler(32, 0.5, 400, 2);
    assert!(l32 < l1, "list 1: {l1}, list 32: {l32}");
}

#[test]
fn arrival_count_matches_poisson_mean() {
    let cfg = desk(5.0);
    let tx = Transmitter::new(&cfg, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trials = 200;
    let total: usize = (0..trials).map(|_| draw_arrivals(&cfg, &tx, &mut rng).len()).sum();
    let mean = cfg.load * (cfg.horizon / cfg.packet_len) as f64;
    let sd_of_mean = (mean / trials as f64).sqrt();
    let got = total as f64 / trials as f64;
    assert!((got - mean).abs() < 3.0 * sd_of_mean, "mean {got} vs {mean}");
}

#[test]
fn high_snr_small_load_is_nearly_error_free() {
    let s = run_sweep(&desk(1.0), &[15.0], 20, 4, Execution::default()).unwrap();
    assert!(s.points[0].pupe <= 0.01, "{:?}", s.points[0]);
}

#[test]
fn min_eb_n0_is_stable_across_seeds() {
    let g = grid(2.0, 10.0, 1.0).unwrap();
    let cfg = SystemConfig {
        horizon: 6 * 2000,
        ..desk(2.0)
    };
    let a = find_min_eb_n0(&cfg, 0.05, &g, 60, 1, Execution::default()).unwrap();
    let b = find_min_eb_n0(&cfg, 0.05, &g, 60, 2, Execution::default()).unwrap();
    let (a, b) = (a.eb_n0_db.unwrap(), b.eb_n0_db.unwrap());
    assert!((a - b).abs() <= 1.0 + 1e-9, "{a} vs {b}");
}

#[test]
fn dump_round_trip() {
    let cfg = SystemConfig {
        horizon: 6 * 2000,
        ..desk(1.0)
    };
    let tx = Transmitter::new(&cfg, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let real: ChannelRealization = synthesize(draw_arrivals(&cfg, &tx, &mut rng), &tx, &cfg, &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let (bin, meta) = (dir.path().join("y.bin"), dir.path().join("y.json"));
    real.write_dump(&bin, &meta).unwrap();
    assert_eq!(ChannelRealization::read_samples(&bin).unwrap(), real.y);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&meta).unwrap()).unwrap();
    assert_eq!(v["arrivals"].as_array().unwrap().len(), real.arrivals.len());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [SystemConfig::desk(), SystemConfig::full()] {
        let path = dir.path().join("c.json");
        std::fs::write(&path, cfg.to_json_pretty()).unwrap();
        assert_eq!(SystemConfig::from_json_file(&path).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn index_bits_round_trip(v in 0usize..1 << 12) {
        prop_assert_eq!(to_index(&from_index(v, 12)), v);
    }

    #[test]
    fn noiseless_polar_round_trip(seed in any::<u64>(), list in 1usize..=8) {
        let code = PolarCode::construct(256, 112, Crc::CCITT16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payload: Vec<u8> = (0..96).map(|_| rng.random::<bool>() as u8).collect();
        let llrs: Vec<f64> = code.encode_payload(&payload).iter().map(|&c| if c == 0 { 4.0 } else { -4.0 }).collect();
        prop_assert_eq!(SclDecoder::new(&code, list).decode(&llrs), Some(payload));
    }

    #[test]
    fn wilson_brackets_estimate(n in 1u64..10_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as u64;
        let (lo, hi) = wilson95(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn cancellation_restores_signal(seed in any::<u64>(), start in 0usize..4000) {
        let cfg = desk(1.0);
        let tx = Transmitter::new(&cfg, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..6000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = tx.modulate(&Message::random(cfg.message_bits, &mut rng));
        let mut y = base.clone();
        tx.superimpose(&mut y, start, &m, 1.0);
        tx.superimpose(&mut y, start, &m, -1.0);
        for (a, b) in y.iter().zip(&base) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_single_user_decoded_anywhere(seed in any::<u64>()) {
        let cfg = SystemConfig { sigma2: 0.0, horizon: 6 * 2000, ..desk(1.0) };
        let tx = Transmitter::new(&cfg, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msg = Message::random(cfg.message_bits, &mut rng);
        let start = rng.random_range(0..cfg.horizon);
        let mut y = vec![0.0; cfg.horizon + cfg.packet_len];
        tx.superimpose(&mut y, start, &tx.modulate(&msg), 1.0);
        let out = Receiver::new(&tx).decode_stream(&y);
        prop_assert_eq!(out.messages, vec![msg]);
        prop_assert_eq!(out.entries[0].start, start);
    }
}
