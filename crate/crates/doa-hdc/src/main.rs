use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use doa_hdc::commands::{self, GenDataOptions};
use doa_hdc::config::ExperimentConfig;
use doa_hdc::error::Error;

#[derive(Parser)]
#[command(name = "doa-hdc", version, about = "Direction-of-arrival estimation with hyperdimensional computing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ULA dataset file
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sample count (defaults to dataset.train_size)
        #[arg(long)]
        count: Option<u64>,
        /// Fix every sample at this SNR instead of the configured span
        #[arg(long)]
        snr: Option<f64>,
        /// Offset added to the base seed, to keep generated files disjoint
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// key=value config overrides, e.g. scenario.m_sources=2
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Train an associative-memory model from a dataset
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Score a dataset with a trained model (plus MUSIC when configured)
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Export the angular pseudo-spectrum of one sample as CSV
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Sample index within the dataset
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Run full experiments (generate, train, score) for each config
    Sweep {
        /// One or more experiment config files
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        /// Directory for the report files
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long = "set")]
        set: Vec<String>,
    },
}

fn load_config(path: &PathBuf, overrides: &[String]) -> Result<ExperimentConfig, Error> {
    let cfg = ExperimentConfig::load(path, overrides)?;
    if let Some(warning) = cfg.coverage_warning() {
        eprintln!("warning: {warning}");
    }
    Ok(cfg)
}

fn run() -> Result<(), Error> {
    match Cli::parse().command {
        Command::GenData {
            config,
            out,
            count,
            snr,
            seed_offset,
            set,
        } => {
            let cfg = load_config(&config, &set)?;
            let opts = GenDataOptions {
                count,
                snr_db: snr,
                seed_offset,
            };
            let header = commands::cmd_gen_data(&cfg, &opts, &out)?;
            println!(
                "wrote {} samples (N={}, T={}, M={}, coherent={}, snr=[{}, {}] dB) to {}",
                header.sample_count,
                header.n_antennas,
                header.n_snapshots,
                header.m_sources,
                header.coherent,
                header.snr_min_db,
                header.snr_max_db,
                out.display()
            );
        }
        Command::Train { config, data, out, set } => {
            let cfg = load_config(&config, &set)?;
            commands::cmd_train(&cfg, &data, &out)?;
            println!("wrote model to {}", out.display());
        }
        Command::Eval {
            config,
            model,
            data,
            out,
            set,
        } => {
            let cfg = load_config(&config, &set)?;
            let outcome = commands::cmd_eval(&cfg, &model, &data, &out)?;
            for row in &outcome.report.rows {
                println!(
                    "{} @ {} dB: MSPE {:.2} dB ({} scored, {} failed)",
                    row.method, row.snr_db, row.mspe_db, row.n_scored, row.n_failed
                );
            }
            for t in &outcome.timing {
                println!(
                    "{}: {:.1} us/inference, {} eigendecompositions",
                    t.method, t.mean_inference_us, t.eig_decompositions
                );
            }
            println!("wrote report to {}", out.display());
        }
        Command::Spectrum {
            config,
            model,
            data,
            index,
            out,
            set,
        } => {
            let cfg = load_config(&config, &set)?;
            commands::cmd_spectrum(&cfg, &model, &data, index, &out)?;
            println!("wrote spectrum to {}", out.display());
        }
        Command::Sweep { config, out_dir, set } => {
            let mut configs = Vec::new();
            for path in &config {
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "config".to_string());
                configs.push((name, load_config(path, &set)?));
            }
            let outcomes = commands::cmd_sweep(&configs, &out_dir)?;
            for ((name, _), outcome) in configs.iter().zip(&outcomes) {
                for row in &outcome.report.rows {
                    println!(
                        "[{name}] {} @ {} dB: MSPE {:.2} dB ({} scored, {} failed)",
                        row.method, row.snr_db, row.mspe_db, row.n_scored, row.n_failed
                    );
                }
                for t in &outcome.timing {
                    println!(
                        "[{name}] {}: {:.1} us/inference, {} eigendecompositions",
                        t.method, t.mean_inference_us, t.eig_decompositions
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
