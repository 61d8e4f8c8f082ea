// temporary debug: error distribution of the smoke config
use doa_hdc::config::ExperimentConfig;
use doa_hdc::dataset::{generate_dataset};
use doa_hdc::decoder::DecoderConfig;
use doa_hdc::estimator::Estimator;
use doa_hdc::eval::{periodic_sq_error, test_dataset_header, train_dataset_header, train_model};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.m_sources = 1;
    cfg.scenario.snr_db = vec![10.0];
    cfg.dataset.train_size = 1000;
    cfg.dataset.test_size = 50;
    cfg.dataset.base_seed = 7;
    cfg.encoder.dim = 10_000;
    cfg.eval.methods = vec!["hdc-lag".to_string()];

    let train_ds = generate_dataset(&train_dataset_header(&cfg)).unwrap();
    let method = cfg.feature_method_for("hdc-lag").unwrap().unwrap();
    let est = Estimator::new(train_model(&cfg, &train_ds, &method).unwrap()).unwrap();
    let test_ds = generate_dataset(&test_dataset_header(&cfg, 0, 10.0)).unwrap();
    let dec = DecoderConfig::new(1, 6.0).unwrap();
    let mut errs: Vec<(f64, f64, f64)> = test_ds
        .samples
        .iter()
        .map(|s| {
            let e = est.estimate(&s.snapshots, &dec).unwrap();
            let err = periodic_sq_error(&e.angles_deg, &s.doas_deg).unwrap();
            (err, s.doas_deg[0], e.angles_deg[0])
        })
        .collect();
    errs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mean: f64 = errs.iter().map(|e| e.0).sum::<f64>() / errs.len() as f64;
    println!("MSPE = {:.2} dB  mean={:.6} rad^2", 10.0 * mean.log10(), mean);
    for (err, truth, got) in errs.iter().take(10) {
        println!("err {:10.6} rad^2 ({:6.2} deg^2): true {:7.2} -> est {:7.2}", err, err.sqrt().to_degrees().powi(2), truth, got);
    }
}
