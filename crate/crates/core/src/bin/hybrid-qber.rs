use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hybrid_qber::adversary::{eve_attempts, measure_leakage};
use hybrid_qber::bits::{read_key_file, write_key_file, RngStream};
use hybrid_qber::harness::{run_experiment, write_csv, write_json, ExperimentConfig};
use hybrid_qber::hybrid::{alice_prepare, bob_estimate, BerNoiseMode, HybridParams, NoisyKeyMessage};
use hybrid_qber::traditional::traditional_estimate;
use hybrid_qber::{Error, Result};

// Stream ids for the single-shot subcommands.
const WRAP_STREAM: u64 = 1;
const TRADITIONAL_STREAM: u64 = 2;
const ATTACK_STREAM: u64 = 3;

#[derive(Parser)]
#[command(name = "hybrid-qber", version, about = "Hybrid QBER estimation for QKD post-processing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Alice,
    Half,
}

impl From<Mode> for BerNoiseMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Alice => BerNoiseMode::AliceProxy,
            Mode::Half => BerNoiseMode::Half,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Flip and wrap a sifted key into a noisy-key message
    Wrap {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        flip: f64,
        #[arg(long, value_enum, default_value = "alice")]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the flipped key that was embedded (ground truth for `attack`)
        #[arg(long)]
        embedded_out: Option<PathBuf>,
        /// Allow p_flip <= 2^-m
        #[arg(long)]
        no_strict: bool,
    },
    /// Estimate QBER from a noisy-key message and Bob's key
    Estimate {
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        bob_key: PathBuf,
        #[arg(long, value_enum)]
        mode_override: Option<Mode>,
    },
    /// Sample-and-discard estimate
    Traditional {
        #[arg(long)]
        alice: PathBuf,
        #[arg(long)]
        bob: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Majority-vote attack on a noisy-key message
    Attack {
        #[arg(long)]
        msg: PathBuf,
        /// The key embedded in the message
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact size of Eve's search space
    Attempts {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p_leaked: f64,
    },
    /// Run a Monte Carlo experiment grid
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn read_message(path: &PathBuf) -> Result<NoisyKeyMessage> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    NoisyKeyMessage::decode(&bytes)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Wrap {
            key,
            m,
            flip,
            mode,
            seed,
            out,
            embedded_out,
            no_strict,
        } => {
            let key = read_key_file(&key)?;
            let params = HybridParams {
                strict_security: !no_strict,
                ..HybridParams::new(m, flip, mode.into())
            };
            let prepared = alice_prepare(&key, &params, &mut RngStream::new(seed, WRAP_STREAM))?;
            std::fs::write(&out, prepared.message.encode()).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            if let Some(path) = embedded_out {
                write_key_file(path, &prepared.embedded_key)?;
            }
        }
        Command::Estimate {
            msg,
            bob_key,
            mode_override,
        } => {
            let msg = read_message(&msg)?;
            let bob = read_key_file(&bob_key)?;
            let outcome = bob_estimate(&msg, &bob, mode_override.map(Into::into))?;
            print_json(&outcome);
        }
        Command::Traditional {
            alice,
            bob,
            fraction,
            seed,
        } => {
            let alice = read_key_file(&alice)?;
            let bob = read_key_file(&bob)?;
            let r = traditional_estimate(
                &alice,
                &bob,
                fraction,
                &mut RngStream::new(seed, TRADITIONAL_STREAM),
            )?;
            print_json(&r.summary());
        }
        Command::Attack { msg, truth, seed } => {
            let msg = read_message(&msg)?;
            let truth = read_key_file(&truth)?;
            let report = measure_leakage(
                &msg.noisy_key(),
                &truth,
                &mut RngStream::new(seed, ATTACK_STREAM),
            )?;
            print_json(&report);
        }
        Command::Attempts { n, p_leaked } => {
            if n == 0 || !(0.0..=1.0).contains(&p_leaked) {
                return Err(Error::Config(format!(
                    "need n >= 1 and p_leaked in [0, 1], got n = {n}, p_leaked = {p_leaked}"
                )));
            }
            println!("{}", eve_attempts(n, p_leaked));
        }
        Command::Run {
            config,
            out,
            json,
            workers,
        } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let rows = run_experiment(&cfg, workers)?;
            write_csv(&rows, &out)?;
            if let Some(path) = json {
                write_json(&rows, path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
