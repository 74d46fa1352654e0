//! Monte Carlo comparison of the estimators over a grid of key lengths and
//! channel QBERs.
//!
//! Each sample draws its Alice key and channel realization from a stream
//! derived from `(key_len, qber, sample)`, and its method-specific
//! randomness from a stream derived from `(method label, key_len, qber,
//! sample)`. Every method therefore sees the same channel realizations, and
//! adding or removing a method never changes another method's numbers.
//! Output is identical for any worker count.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{random_bits, RngStream};
use crate::channel::BscChannel;
use crate::error::{Error, Result};
use crate::hybrid::{alice_prepare, bob_estimate, BerNoiseMode, HybridParams};
use crate::traditional::{sample_size, traditional_estimate};

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

pub const CSV_HEADER: &str =
    "method,key_len,true_qber,n_samples,mean_est,std,ci_low,ci_high,mean_raw,seed";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MethodSpec {
    #[serde(alias = "traditional")]
    Traditional { fraction: f64 },
    /// Hybrid estimator using Alice's noise-BER proxy.
    #[serde(alias = "hybrid")]
    Hybrid { m: u32, p_flip: f64 },
    /// Hybrid estimator assuming a noise BER of one half.
    #[serde(alias = "hybrid_prime")]
    HybridPrime { m: u32, p_flip: f64 },
}

fn percent(x: f64) -> String {
    let p = (x * 100.0 * 1e9).round() / 1e9;
    format!("{p}%")
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match *self {
            MethodSpec::Traditional { fraction } => format!("Traditional-{}", percent(fraction)),
            MethodSpec::Hybrid { m, p_flip } => {
                format!("Hybrid-{}-Noise-Level-{m}", percent(p_flip))
            }
            MethodSpec::HybridPrime { m, p_flip } => {
                format!("Hybrid'-{}-Noise-Level-{m}", percent(p_flip))
            }
        }
    }

    pub fn hybrid_params(&self, strict_security: bool) -> Option<HybridParams> {
        let (m, p_flip, mode) = match *self {
            MethodSpec::Traditional { .. } => return None,
            MethodSpec::Hybrid { m, p_flip } => (m, p_flip, BerNoiseMode::AliceProxy),
            MethodSpec::HybridPrime { m, p_flip } => (m, p_flip, BerNoiseMode::Half),
        };
        Some(HybridParams {
            strict_security,
            ..HybridParams::new(m, p_flip, mode)
        })
    }

    /// Fraction of the sifted key left after estimation.
    pub fn remaining_fraction(&self, key_len: usize) -> f64 {
        match *self {
            MethodSpec::Traditional { fraction } => {
                (key_len - sample_size(fraction, key_len)) as f64 / key_len as f64
            }
            _ => 1.0,
        }
    }

    fn validate(&self, strict_security: bool) -> Result<()> {
        match *self {
            MethodSpec::Traditional { fraction } => {
                if fraction > 0.0 && fraction <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidProbability {
                        name: "fraction",
                        value: fraction,
                        range: "(0, 1]",
                    })
                }
            }
            _ => self.hybrid_params(strict_security).unwrap().validate(),
        }
    }
}

fn default_strict() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub key_lengths: Vec<usize>,
    pub qbers: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_strict")]
    pub strict_security: bool,
}

impl ExperimentConfig {
    /// Two key lengths, eight QBERs, 500 samples, seven methods.
    pub fn paper_default(seed: u64) -> Self {
        ExperimentConfig {
            key_lengths: vec![100, 500],
            qbers: vec![0.01, 0.03, 0.05, 0.07, 0.10, 0.15, 0.20, 0.40],
            samples: 500,
            seed,
            methods: vec![
                MethodSpec::Traditional { fraction: 0.10 },
                MethodSpec::Traditional { fraction: 0.20 },
                MethodSpec::Traditional { fraction: 0.50 },
                MethodSpec::Hybrid { m: 3, p_flip: 0.13 },
                MethodSpec::Hybrid { m: 5, p_flip: 0.04 },
                MethodSpec::HybridPrime { m: 3, p_flip: 0.13 },
                MethodSpec::HybridPrime { m: 5, p_flip: 0.04 },
            ],
            strict_security: true,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Config(format!(
                "samples must be at least 2, got {}",
                self.samples
            )));
        }
        if let Some(q) = self.qbers.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::Config(format!("qber {q} outside [0, 1]")));
        }
        if self.key_lengths.contains(&0) {
            return Err(Error::Config("key length 0".into()));
        }
        for method in &self.methods {
            method.validate(self.strict_security).map_err(|e| Error::InCell {
                context: format!("method {}", method.label()),
                source: Box::new(e),
            })?;
        }
        Ok(())
    }
}

/// One aggregated grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub key_len: usize,
    pub true_qber: f64,
    pub n_samples: usize,
    pub mean_est: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_raw: f64,
    pub seed: u64,
}

impl SummaryRow {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    fn rounded(&self) -> SummaryRow {
        SummaryRow {
            true_qber: round_sig12(self.true_qber),
            mean_est: round_sig12(self.mean_est),
            std: round_sig12(self.std),
            ci_low: round_sig12(self.ci_low),
            ci_high: round_sig12(self.ci_high),
            mean_raw: round_sig12(self.mean_raw),
            ..self.clone()
        }
    }
}

/// One Monte Carlo draw: the reported (clamped) estimate and the raw one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOutcome {
    pub est: f64,
    pub raw: f64,
}

/// A summary row together with the samples it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: MethodSpec,
    pub row: SummaryRow,
    pub samples: Vec<SampleOutcome>,
}

impl CellResult {
    /// Mean of `|est - true_qber|` over the samples.
    pub fn mean_abs_error(&self) -> f64 {
        let q = self.row.true_qber;
        self.samples.iter().map(|s| (s.est - q).abs()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Stream id from a stable hash of the labelled cell coordinates.
pub fn derive_stream_id(label: &str, key_len: usize, qber: f64, sample: usize) -> u64 {
    let mut h = Sha256::new();
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update((key_len as u64).to_le_bytes());
    h.update(qber.to_bits().to_le_bytes());
    h.update((sample as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

const SCENARIO_LABEL: &str = "scenario";

fn run_sample(
    cfg: &ExperimentConfig,
    method: &MethodSpec,
    label: &str,
    key_len: usize,
    qber: f64,
    sample: usize,
) -> Result<SampleOutcome> {
    let mut scenario = RngStream::new(
        cfg.seed,
        derive_stream_id(SCENARIO_LABEL, key_len, qber, sample),
    );
    let alice = random_bits(&mut scenario, key_len);
    let bob = BscChannel::new(qber)?.transmit(&alice, &mut scenario).bob_key;

    let mut rng = RngStream::new(cfg.seed, derive_stream_id(label, key_len, qber, sample));
    match *method {
        MethodSpec::Traditional { fraction } => {
            let r = traditional_estimate(&alice, &bob, fraction, &mut rng)?;
            Ok(SampleOutcome {
                est: r.qber_est,
                raw: r.qber_est,
            })
        }
        _ => {
            let params = method.hybrid_params(cfg.strict_security).unwrap();
            let prepared = alice_prepare(&alice, &params, &mut rng)?;
            let out = bob_estimate(&prepared.message, &bob, Some(params.mode))?;
            Ok(SampleOutcome {
                est: out.qber_est,
                raw: out.qber_raw,
            })
        }
    }
}

fn summarize(label: String, key_len: usize, qber: f64, seed: u64, samples: &[SampleOutcome]) -> SummaryRow {
    let n = samples.len() as f64;
    let mean_est = samples.iter().map(|s| s.est).sum::<f64>() / n;
    let mean_raw = samples.iter().map(|s| s.raw).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|s| (s.est - mean_est).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let std = var.sqrt();
    let half = Z_95 * std / n.sqrt();
    SummaryRow {
        method: label,
        key_len,
        true_qber: qber,
        n_samples: samples.len(),
        mean_est,
        std,
        ci_low: mean_est - half,
        ci_high: mean_est + half,
        mean_raw,
        seed,
    }
}

/// Runs every cell and keeps the per-sample outcomes.
pub fn run_experiment_detailed(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (mi, _) in cfg.methods.iter().enumerate() {
        for &key_len in &cfg.key_lengths {
            for &qber in &cfg.qbers {
                cells.push((mi, key_len, qber));
            }
        }
    }
    cells.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });

    let run_cell = |&(mi, key_len, qber): &(usize, usize, f64)| -> Result<CellResult> {
        let method = cfg.methods[mi];
        let label = method.label();
        let samples = (0..cfg.samples)
            .map(|s| run_sample(cfg, &method, &label, key_len, qber, s))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InCell {
                context: format!("cell ({label}, key_len {key_len}, qber {qber})"),
                source: Box::new(e),
            })?;
        let row = summarize(label, key_len, qber, cfg.seed, &samples);
        Ok(CellResult {
            method,
            row,
            samples,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| cells.par_iter().map(run_cell).collect())
}

pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<SummaryRow>> {
    Ok(run_experiment_detailed(cfg, workers)?
        .into_iter()
        .map(|c| c.row)
        .collect())
}

/// Rounds to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt_float(x: f64) -> String {
    format!("{}", round_sig12(x))
}

pub fn to_csv_string(rows: &[SummaryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.key_len,
            fmt_float(r.true_qber),
            r.n_samples,
            fmt_float(r.mean_est),
            fmt_float(r.std),
            fmt_float(r.ci_low),
            fmt_float(r.ci_high),
            fmt_float(r.mean_raw),
            r.seed
        )
        .unwrap();
    }
    out
}

pub fn to_json_string(rows: &[SummaryRow]) -> String {
    let rounded: Vec<SummaryRow> = rows.iter().map(SummaryRow::rounded).collect();
    let mut s = serde_json::to_string_pretty(&rounded).expect("rows serialize");
    s.push('\n');
    s
}

pub fn write_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(rows)).map_err(|e| Error::io(path, e))
}

pub fn write_json(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_string(rows)).map_err(|e| Error::io(path, e))
}
