//! Reproducible dataset generation and the on-disk dataset format:
//! a UTF-8 JSON header line followed by little-endian binary records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    generate_snapshots, ArrayConfig, SnapshotMatrix, SourceScenario, RNG_ALGORITHM,
};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Candidate angle sets per meta-seed before the sampler re-seeds itself.
const REJECTION_CAP: u32 = 1000;

/// Self-describing dataset header; together with an index it determines
/// every sample bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub n_antennas: usize,
    pub n_snapshots: usize,
    pub m_sources: usize,
    pub coherent: bool,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub min_separation_deg: f64,
    pub grid_resolution_deg: f64,
    pub rng_algorithm: String,
    pub base_seed: u64,
    pub sample_count: u64,
}

impl DatasetHeader {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                expected: DATASET_FORMAT_VERSION,
            });
        }
        let cfg = ArrayConfig::new(self.n_antennas, self.n_snapshots)?;
        if self.m_sources == 0 || self.m_sources >= cfg.n_antennas {
            return Err(Error::Config(format!(
                "{} sources do not fit an array of {} antennas",
                self.m_sources, cfg.n_antennas
            )));
        }
        if self.snr_min_db > self.snr_max_db {
            return Err(Error::Config("snr range is inverted".into()));
        }
        if !(self.min_separation_deg >= 0.0) {
            return Err(Error::Config("minimum separation must be nonnegative".into()));
        }
        if self.m_sources.saturating_sub(1) as f64 * self.min_separation_deg > 180.0 {
            return Err(Error::Config(format!(
                "{} sources cannot be spread over 180° at {}° separation",
                self.m_sources, self.min_separation_deg
            )));
        }
        if self.rng_algorithm != RNG_ALGORITHM {
            return Err(Error::Config(format!(
                "unsupported rng algorithm '{}' (this build provides '{RNG_ALGORITHM}')",
                self.rng_algorithm
            )));
        }
        Ok(())
    }

    pub fn array_config(&self) -> Result<ArrayConfig> {
        ArrayConfig::new(self.n_antennas, self.n_snapshots)
    }
}

/// One stored sample: its seed, the true DoAs, and the raw snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub seed: u64,
    pub doas_deg: Vec<f64>,
    pub snapshots: SnapshotMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<DatasetSample>,
}

fn reseed(seed: u64, round: u64) -> u64 {
    // fixed odd-constant mix so exhausted rejection rounds stay deterministic
    seed.wrapping_add((round + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Rejection-sample M angles uniform over [-90°, 90°] with the minimum
/// pairwise separation; after 1000 failed candidate sets the stream
/// re-seeds deterministically and keeps going.
fn draw_doas(rng: &mut ChaCha12Rng, sample_seed: u64, m: usize, min_sep: f64) -> Result<Vec<f64>> {
    let mut round = 0u64;
    loop {
        for _ in 0..REJECTION_CAP {
            let cand: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 180.0 - 90.0).collect();
            let ok = (0..m).all(|i| {
                (i + 1..m).all(|j| (cand[i] - cand[j]).abs() >= min_sep)
            });
            if ok {
                return Ok(cand);
            }
        }
        round += 1;
        if round > REJECTION_CAP as u64 {
            return Err(Error::Config(format!(
                "could not draw {m} angles at {min_sep}° separation"
            )));
        }
        *rng = ChaCha12Rng::seed_from_u64(reseed(sample_seed, round));
    }
}

/// Generate sample `index` of the dataset the header describes. Sample i
/// uses seed `base_seed + i`, so any sample regenerates independently and
/// parallel generation matches serial generation bit-exactly.
pub fn generate_sample(header: &DatasetHeader, index: u64) -> Result<DatasetSample> {
    let seed = header.base_seed.wrapping_add(index);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let doas_deg = draw_doas(&mut rng, seed, header.m_sources, header.min_separation_deg)?;
    let u: f64 = rng.random();
    let snr_db = header.snr_min_db + u * (header.snr_max_db - header.snr_min_db);
    let scenario_seed = rng.next_u64();
    let scn = SourceScenario::new(doas_deg.clone(), snr_db, header.coherent, scenario_seed);
    let snapshots = generate_snapshots(&header.array_config()?, &scn)?;
    Ok(DatasetSample {
        seed,
        doas_deg,
        snapshots,
    })
}

pub fn generate_dataset(header: &DatasetHeader) -> Result<Dataset> {
    header.validate()?;
    let samples = (0..header.sample_count)
        .map(|i| generate_sample(header, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        header: header.clone(),
        samples,
    })
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &ds.header)
        .map_err(|e| Error::Corrupt(format!("header serialization failed: {e}")))?;
    w.write_all(b"\n")?;
    for s in &ds.samples {
        w.write_all(&s.seed.to_le_bytes())?;
        for &a in &s.doas_deg {
            w.write_all(&a.to_le_bytes())?;
        }
        for z in s.snapshots.data.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = r.read(&mut byte)?;
        if n == 0 {
            return Err(Error::Corrupt("missing dataset header line".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: DatasetHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Corrupt(format!("bad dataset header: {e}")))?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Version {
            found: header.format_version,
            expected: DATASET_FORMAT_VERSION,
        });
    }
    header.validate()?;

    let (n, t, m) = (header.n_antennas, header.n_snapshots, header.m_sources);
    let record_len = 8 + m * 8 + n * t * 16;
    let mut samples = Vec::with_capacity(header.sample_count as usize);
    let mut buf = vec![0u8; record_len];
    for i in 0..header.sample_count {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Corrupt(format!("dataset truncated at record {i}")))?;
        let seed = u64::from_le_bytes(buf[0..8].try_into().unwrap());
        let mut off = 8;
        let mut doas_deg = Vec::with_capacity(m);
        for _ in 0..m {
            doas_deg.push(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        let mut values = Vec::with_capacity(n * t);
        for _ in 0..n * t {
            let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
            values.push(Complex64::new(re, im));
            off += 16;
        }
        let data = Array2::from_shape_vec((n, t), values)
            .map_err(|e| Error::Corrupt(format!("record {i} shape: {e}")))?;
        samples.push(DatasetSample {
            seed,
            doas_deg,
            snapshots: SnapshotMatrix { data },
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Corrupt("trailing bytes after last record".into()));
    }
    Ok(Dataset { header, samples })
}
