//! `frsparse` command-line interface.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use frsparse::harness::capture::{export_capture, write_iq_csv, CaptureFormat};
use frsparse::harness::config::{sigma2_for, ExperimentConfig};
use frsparse::harness::ingest_capture;
use frsparse::harness::montecarlo::run_monte_carlo_with_workers;
use frsparse::harness::report::{bounds_table, render_bounds, render_summary, write_report};
use frsparse::recovery::{recover, AnnihilationConfig};
use frsparse::synthesis::{add_noise, quantize, sample_uniform, NoiseModel, QuantizerModel};
use frsparse::{FrftOrder, Kernel, Spike};

#[derive(Parser)]
#[command(
    name = "frsparse",
    version,
    about = "Sparse sampling and recovery in the fractional Fourier domain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize samples from a config and write them as iq-csv
    Synth {
        #[arg(short, long)]
        config: PathBuf,
        /// Output file (`-` for stdout)
        #[arg(short, long, default_value = "-")]
        output: String,
        /// Add CN noise at this PSNR (dB)
        #[arg(long)]
        psnr_db: Option<f64>,
        /// Noise seed (defaults to the config's run.seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Apply the config's quantizer
        #[arg(long)]
        quantize: bool,
    },
    /// Recover spikes from an iq-csv capture
    Recover {
        #[arg(short, long)]
        input: PathBuf,
        /// Number of spikes K
        #[arg(short = 'k', long)]
        spikes: usize,
        /// FrFT order in radians
        #[arg(long)]
        theta: f64,
        /// Sample period T in seconds
        #[arg(long)]
        period: f64,
        /// Kernel weights p_0,...,p_{M-1}
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        weights: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        imag_tol: f64,
    },
    /// Print Cramér–Rao bounds for each PSNR point of a config
    Crb {
        #[arg(short, long)]
        config: PathBuf,
        /// Emit JSON instead of a text table
        #[arg(long)]
        json: bool,
    },
    /// Run the Monte Carlo benchmark and write report files
    Montecarlo {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long, default_value = "report")]
        out_dir: PathBuf,
        /// Worker threads (0 = automatic; overrides run.workers)
        #[arg(short, long)]
        workers: Option<usize>,
    },
    /// Validate a capture file and optionally rewrite it normalized
    Ingest {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value = "iq-csv")]
        format: String,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        period: f64,
        /// Write the normalized capture here
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RecoverOutput {
    spikes: Vec<Spike>,
    q: Vec<f64>,
    roots: Vec<[f64; 2]>,
    residual_norm: f64,
    singular_values: Vec<f64>,
    q_imag_residue: f64,
    ill_posed: bool,
    near_integer: Vec<bool>,
}

#[derive(Serialize)]
struct IngestSummary {
    samples: usize,
    period: f64,
    theta: f64,
    peak_channel: f64,
    duration: f64,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> Result<()> {
    match run(Cli::parse()) {
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) =>
        {
            Ok(())
        }
        other => other,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            config,
            output,
            psnr_db,
            seed,
            quantize: apply_quantizer,
        } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let Some(signal) = cfg.fixed_signal()? else {
                bail!("synth needs fixed amplitudes/locations, not [signal.random]");
            };
            let kernel = cfg.build_kernel()?;
            let clean = sample_uniform(&signal, &kernel, cfg.order()?, cfg.samples)?;
            let mut samples = clean.clone();
            if let Some(db) = psnr_db {
                let noise = NoiseModel::new(sigma2_for(&signal, db), seed.unwrap_or(cfg.run.seed))?;
                samples = add_noise(&samples, &noise);
            }
            if apply_quantizer {
                let q = match cfg.quantizer_for(&clean)? {
                    Some(q) => q,
                    None => QuantizerModel::fitted(8, &clean, 1.25)?,
                };
                let out = quantize(&samples, &q);
                eprintln!(
                    "quantizer: {} bits, full scale {:.6}, clipped {}",
                    q.bits, q.full_scale, out.clipped
                );
                samples = out.samples;
            }
            if output == "-" {
                write_iq_csv(&samples, io::stdout().lock())?;
            } else {
                export_capture(&samples, &output).with_context(|| format!("writing {output}"))?;
            }
        }
        Command::Recover {
            input,
            spikes,
            theta,
            period,
            weights,
            imag_tol,
        } => {
            let theta = FrftOrder::new(theta)?;
            let kernel = Kernel::new(weights, period)?;
            let samples = ingest_capture(&input, CaptureFormat::IqCsv, theta, period)
                .with_context(|| format!("reading {}", input.display()))?;
            let mut ann = AnnihilationConfig::new(spikes, kernel.taps());
            ann.imag_tol = imag_tol;
            let r = recover(&samples, &kernel, &ann)?;
            print_json(&RecoverOutput {
                roots: r.roots.iter().map(|z| [z.re, z.im]).collect(),
                spikes: r.spikes,
                q: r.q,
                residual_norm: r.residual_norm,
                singular_values: r.singular_values,
                q_imag_residue: r.q_imag_residue,
                ill_posed: r.ill_posed,
                near_integer: r.near_integer,
            })?;
        }
        Command::Crb { config, json } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let rows = bounds_table(&cfg)?;
            if json {
                print_json(&rows)?;
            } else {
                print!("{}", render_bounds(&rows));
            }
        }
        Command::Montecarlo {
            config,
            out_dir,
            workers,
        } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let report = run_monte_carlo_with_workers(&cfg, workers.unwrap_or(cfg.run.workers))?;
            let files = write_report(&report, &out_dir)
                .with_context(|| format!("writing report to {}", out_dir.display()))?;
            print!("{}", render_summary(&report));
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Ingest {
            input,
            format,
            theta,
            period,
            output,
        } => {
            let format: CaptureFormat = format.parse()?;
            let samples = ingest_capture(&input, format, FrftOrder::new(theta)?, period)
                .with_context(|| format!("reading {}", input.display()))?;
            if let Some(path) = output {
                write_iq_csv(&samples, File::create(&path)?)?;
            }
            print_json(&IngestSummary {
                samples: samples.len(),
                period: samples.period(),
                theta: samples.theta().theta(),
                peak_channel: frsparse::synthesis::peak_channel_amplitude(samples.values()),
                duration: samples.len() as f64 * samples.period(),
            })?;
        }
    }
    Ok(())
}
