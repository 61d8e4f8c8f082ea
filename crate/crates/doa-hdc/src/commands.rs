//! Implementations behind the CLI subcommands, separated so integration
//! tests can drive them directly.

use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::dataset::{generate_dataset, load_dataset, save_dataset, Dataset, DatasetHeader};
use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::eval::{
    evaluate_dataset, export_report, run_experiment, train_dataset_header, train_model,
    ExperimentOutcome, MethodTiming, MspeReport,
};

/// Adjustments `gen-data` applies on top of the config: sample count,
/// a fixed SNR instead of the configured span, and a seed offset so
/// train/test files drawn from one config stay disjoint.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenDataOptions {
    pub count: Option<u64>,
    pub snr_db: Option<f64>,
    pub seed_offset: u64,
}

pub fn cmd_gen_data(
    cfg: &ExperimentConfig,
    opts: &GenDataOptions,
    out: &Path,
) -> Result<DatasetHeader> {
    cfg.validate()?;
    let mut header = train_dataset_header(cfg);
    if let Some(snr) = opts.snr_db {
        header.snr_min_db = snr;
        header.snr_max_db = snr;
    }
    if let Some(count) = opts.count {
        header.sample_count = count;
    }
    header.base_seed = header.base_seed.wrapping_add(opts.seed_offset);
    header.validate()?;
    let ds = generate_dataset(&header)?;
    save_dataset(&ds, out)?;
    Ok(header)
}

fn check_geometry(cfg: &ExperimentConfig, ds: &Dataset) -> Result<()> {
    if ds.header.n_antennas != cfg.array.n_antennas
        || ds.header.n_snapshots != cfg.array.n_snapshots
    {
        return Err(Error::Config(format!(
            "dataset geometry {}x{} does not match config {}x{}",
            ds.header.n_antennas,
            ds.header.n_snapshots,
            cfg.array.n_antennas,
            cfg.array.n_snapshots
        )));
    }
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig, data: &Path, out: &Path) -> Result<()> {
    cfg.validate()?;
    let ds = load_dataset(data)?;
    check_geometry(cfg, &ds)?;
    let mem = train_model(cfg, &ds, &cfg.feature_method())?;
    mem.save(out)?;
    Ok(())
}

/// Score a dataset with a trained model, plus the MUSIC baseline when the
/// config lists it; rows share the decoder settings exactly.
pub fn cmd_eval(
    cfg: &ExperimentConfig,
    model: &Path,
    data: &Path,
    out: &Path,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let ds = load_dataset(data)?;
    check_geometry(cfg, &ds)?;
    let estimator = Estimator::from_file(model)?;
    let model_method = estimator.memory().meta.feature_method.name().to_string();

    let mut method_names = vec![model_method.clone()];
    if cfg.eval.methods.iter().any(|m| m == "music") {
        method_names.push("music".to_string());
    }

    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for name in &method_names {
        let est = (name == &model_method).then_some(&estimator);
        let (row, counters) = evaluate_dataset(cfg, &ds, name, est)?;
        timing.push(MethodTiming {
            method: name.clone(),
            mean_inference_us: counters.wall.as_secs_f64() * 1e6
                / counters.inferences.max(1) as f64,
            eig_decompositions: counters.eig_decompositions,
        });
        rows.push(row);
    }
    let outcome = ExperimentOutcome {
        report: MspeReport {
            config: cfg.clone(),
            rows,
        },
        timing,
    };
    export_report(&outcome.report, out)?;
    Ok(outcome)
}

/// Export the angular pseudo-spectrum of one dataset sample as CSV with
/// the resolved config and the true DoAs echoed in comment lines.
pub fn cmd_spectrum(
    cfg: &ExperimentConfig,
    model: &Path,
    data: &Path,
    index: usize,
    out: &Path,
) -> Result<()> {
    cfg.validate()?;
    let ds = load_dataset(data)?;
    check_geometry(cfg, &ds)?;
    let sample = ds.samples.get(index).ok_or_else(|| {
        Error::Config(format!(
            "sample index {index} out of range (dataset holds {})",
            ds.samples.len()
        ))
    })?;
    let estimator = Estimator::from_file(model)?;
    let spectrum = estimator.spectrum(&sample.snapshots)?;

    let config_json = serde_json::to_string(cfg)
        .map_err(|e| Error::Corrupt(format!("config echo failed: {e}")))?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
    writeln!(w, "# config = {config_json}")?;
    writeln!(
        w,
        "# true_doas_deg = {}",
        sample
            .doas_deg
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )?;
    writeln!(w, "angle_deg,score")?;
    for (k, score) in spectrum.scores.iter().enumerate() {
        writeln!(w, "{},{}", spectrum.grid.angle(k), score)?;
    }
    w.flush()?;
    Ok(())
}

/// Run one experiment per config file; report files land next to `out_dir`
/// named after each config.
pub fn cmd_sweep(configs: &[(String, ExperimentConfig)], out_dir: &Path) -> Result<Vec<ExperimentOutcome>> {
    std::fs::create_dir_all(out_dir)?;
    let mut outcomes = Vec::with_capacity(configs.len());
    for (name, cfg) in configs {
        let outcome = run_experiment(cfg)?;
        export_report(&outcome.report, &out_dir.join(format!("{name}.report.json")))?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
