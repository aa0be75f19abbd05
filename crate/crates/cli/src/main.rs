use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use odma_ura::exec::{with_threads, Execution};
use odma_ura::harness::{self, write_csv, write_metadata, CsvRow, SweepResult};
use odma_ura::receiver::ReceiverOptions;
use odma_ura::{DetectorMode, SystemConfig};
use std::path::{Path, PathBuf};

/// Monte Carlo simulator for frame-asynchronous unsourced random access with
/// on-off division multiple access.
#[derive(Parser)]
#[command(name = "ura-sim", version)]
struct Cli {
    /// Start-time front end; `preamble` enables a 256-sample preamble unless
    /// the config already sets one.
    #[arg(long, global = true, value_enum)]
    detector: Option<Detector>,
    /// Worker threads for the trial pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run trials one after another on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Detector {
    Energy,
    Preamble,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Full,
    Desk,
}

#[derive(Args)]
struct Base {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "profile")]
    config: Option<PathBuf>,
    /// Built-in configuration instead of a file.
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Override the normalized load K_a.
    #[arg(long)]
    ka: Option<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Master seed (default: the config seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one operating point.
    Run {
        #[command(flatten)]
        base: Base,
        /// Eb/N0 in dB (default: the one implied by the config power).
        #[arg(long)]
        ebn0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// PUPE over an Eb/N0 grid.
    Sweep {
        #[command(flatten)]
        base: Base,
        /// `lo:hi:step` in dB, or a single value.
        #[arg(long)]
        ebn0: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest grid Eb/N0 whose PUPE upper 95% bound is at most `eps`.
    Minebn0 {
        #[command(flatten)]
        base: Base,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long)]
        ebn0: String,
        /// Optional CSV of the evaluated points.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One sweep per inner window length (in packets).
    AblateWindow {
        #[command(flatten)]
        base: Base,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
        lens: Vec<usize>,
        #[arg(long)]
        ebn0: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single trial and write its receiver trace as JSON, optionally
    /// with the received samples.
    Trace {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        ebn0: Option<f64>,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the samples (little-endian f64) and the ground truth.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Print a built-in configuration as JSON.
    Profile {
        #[arg(value_enum)]
        name: Profile,
    },
}

struct Loaded {
    cfg: SystemConfig,
    seed: u64,
    trials: usize,
}

fn load(base: &Base, detector: Option<Detector>) -> Result<Loaded> {
    let mut cfg = match (&base.config, base.profile) {
        (Some(path), _) => SystemConfig::from_json_file(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(Profile::Full)) => SystemConfig::full(),
        (None, Some(Profile::Desk)) => SystemConfig::desk(),
        (None, None) => bail!("either --config or --profile is required"),
    };
    let eb_n0 = cfg.eb_n0_db();
    if let Some(ka) = base.ka {
        cfg.load = ka;
    }
    cfg = match detector {
        Some(Detector::Energy) => cfg.with_detector(DetectorMode::PatternEnergy, 0),
        Some(Detector::Preamble) => cfg.with_detector(DetectorMode::PreambleCorrelation, 256),
        None => cfg,
    };
    // Keep the configured Eb/N0 when the detector override changes the
    // energy per packet.
    if eb_n0.is_finite() {
        cfg = cfg.with_eb_n0(eb_n0);
    }
    cfg.validate()?;
    Ok(Loaded {
        seed: base.seed.unwrap_or(cfg.seed),
        trials: base.trials,
        cfg,
    })
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn save(out: &Path, sweeps: &[SweepResult]) -> Result<()> {
    let rows: Vec<CsvRow> = sweeps.iter().flat_map(SweepResult::csv_rows).collect();
    write_csv(out, &rows).with_context(|| format!("writing {}", out.display()))?;
    write_metadata(sidecar(out), sweeps)?;
    for r in &rows {
        println!(
            "Eb/N0 {:6.2} dB  inner {}  {}  pupe {:.4} [{:.4}, {:.4}]  ({} / {})",
            r.eb_n0_db, r.inner_len, r.detector, r.pupe, r.ci_lo, r.ci_hi, r.misses, r.arrivals
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    with_threads(cli.threads, || dispatch(&cli, exec))
}

fn dispatch(cli: &Cli, exec: Execution) -> Result<()> {
    match &cli.command {
        Command::Run { base, ebn0, out } => {
            let c = load(base, cli.detector)?;
            let db = ebn0.unwrap_or_else(|| c.cfg.eb_n0_db());
            let sweep = harness::run_sweep(&c.cfg, &[db], c.trials, c.seed, exec)?;
            save(out, &[sweep])
        }
        Command::Sweep { base, ebn0, out } => {
            let c = load(base, cli.detector)?;
            let grid = harness::parse_grid(ebn0)?;
            let sweep = harness::run_sweep(&c.cfg, &grid, c.trials, c.seed, exec)?;
            save(out, &[sweep])
        }
        Command::Minebn0 { base, eps, ebn0, out } => {
            let c = load(base, cli.detector)?;
            let grid = harness::parse_grid(ebn0)?;
            let found = harness::find_min_eb_n0(&c.cfg, *eps, &grid, c.trials, c.seed, exec)?;
            if let Some(out) = out {
                save(out, std::slice::from_ref(&found.sweep))?;
            }
            match found.eb_n0_db {
                Some(db) => println!("min Eb/N0 for PUPE <= {eps}: {db} dB"),
                None => println!("min Eb/N0 for PUPE <= {eps}: not found on the grid"),
            }
            Ok(())
        }
        Command::AblateWindow { base, lens, ebn0, out } => {
            let c = load(base, cli.detector)?;
            let grid = harness::parse_grid(ebn0)?;
            let sweeps = harness::ablate_window(&c.cfg, lens, &grid, c.trials, c.seed, exec)?;
            save(out, &sweeps)
        }
        Command::Trace {
            base,
            ebn0,
            index,
            out,
            dump,
        } => {
            let c = load(base, cli.detector)?;
            let cfg = ebn0.map_or_else(|| c.cfg.clone(), |db| c.cfg.with_eb_n0(db));
            let system = harness::System::new(&cfg, c.seed)?;
            let detail = system.run_detailed(
                *index,
                ReceiverOptions {
                    trace: true,
                    ..ReceiverOptions::default()
                },
            );
            let doc = serde_json::json!({
                "result": detail.result,
                "stats": detail.output.stats,
                "events": detail.output.trace,
            });
            std::fs::write(out, serde_json::to_string_pretty(&doc)?)?;
            if let Some(bin) = dump {
                detail.realization.write_dump(bin, sidecar(bin))?;
            }
            let r = &detail.result;
            println!(
                "trial {}: {} arrivals, {} misses, {} decoded",
                r.trial_index, r.arrivals, r.misses, r.decoded_count
            );
            Ok(())
        }
        Command::Profile { name } => {
            let cfg = match name {
                Profile::Full => SystemConfig::full(),
                Profile::Desk => SystemConfig::desk(),
            };
            println!("{}", cfg.to_json_pretty());
            Ok(())
        }
    }
}
