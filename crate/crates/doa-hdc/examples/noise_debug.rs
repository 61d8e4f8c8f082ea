// temporary debug: noise injection under a protocol-realistic SNR span
use doa_hdc::config::ExperimentConfig;
use doa_hdc::dataset::generate_dataset;
use doa_hdc::decoder::DecoderConfig;
use doa_hdc::estimator::Estimator;
use doa_hdc::eval::{periodic_sq_error, test_dataset_header, train_dataset_header, train_model};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.scenario.m_sources = 2;
    cfg.scenario.coherent = false;
    cfg.scenario.snr_db = vec![-5.0, 5.0];
    cfg.dataset.train_size = 2000;
    cfg.dataset.test_size = 500;
    cfg.dataset.base_seed = 99;
    cfg.encoder.dim = 10_000;
    cfg.grid.resolution_deg = 0.2;
    let method = cfg.feature_method_for("hdc-lag").unwrap().unwrap();
    let train_ds = generate_dataset(&train_dataset_header(&cfg)).unwrap();
    let est = Estimator::new(train_model(&cfg, &train_ds, &method).unwrap()).unwrap();
    let dec = DecoderConfig::new(2, 6.0).unwrap();

    // 5 dB -> -5 dB: sigma_s^2/(1+v) = sigma_s^2/10 => v = 9
    let extra_var = 9.0;
    let test_ds = generate_dataset(&test_dataset_header(&cfg, 1, 5.0)).unwrap();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(271828);
    let (mut clean_errs, mut noisy_errs) = (Vec::new(), Vec::new());
    let (mut wins, mut losses) = (0, 0);
    for s in &test_ds.samples {
        let mut noisy = s.snapshots.clone();
        let sigma = (extra_var / 2.0f64).sqrt();
        for z in noisy.data.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += num_complex::Complex64::new(re * sigma, im * sigma);
        }
        let err = |x: &doa_hdc::signal::SnapshotMatrix| -> f64 {
            let e = est.estimate(x, &dec).unwrap();
            periodic_sq_error(&e.angles_deg, &s.doas_deg).unwrap()
        };
        let (c, n) = (err(&s.snapshots), err(&noisy));
        if n > c { wins += 1 } else if n < c { losses += 1 }
        clean_errs.push(c);
        noisy_errs.push(n);
    }
    let meanc = clean_errs.iter().sum::<f64>() / clean_errs.len() as f64;
    let meann = noisy_errs.iter().sum::<f64>() / noisy_errs.len() as f64;
    println!(
        "median clean {:.6} vs noisy {:.6} | mean {:.5} vs {:.5} | wins {wins} losses {losses}",
        median(clean_errs), median(noisy_errs), meanc, meann
    );
}
