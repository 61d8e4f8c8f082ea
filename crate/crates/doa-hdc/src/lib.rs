//! Direction-of-arrival estimation with hyperdimensional computing.
//!
//! The pipeline simulates a half-wavelength uniform linear array, distills
//! each snapshot matrix into a covariance-derived feature vector, encodes
//! it as a complex FHRR hypervector, and matches it against an associative
//! memory of per-angle centroids; greedy non-maximum suppression over the
//! resulting pseudo-spectrum yields the multi-source estimate. A classical
//! MUSIC baseline runs over the same grid and decoder, and an MSPE harness
//! compares the methods per SNR point.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod decoder;
pub mod eig;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod features;
pub mod grid;
pub mod hdc;
pub mod memory;
pub mod music;
pub mod signal;

pub use decoder::{decode, DecoderConfig, DoaEstimate};
pub use error::{Error, Result};
pub use estimator::Estimator;
pub use features::{FeatureMethod, FeatureVector, Normalizer};
pub use grid::{AngularGrid, PseudoSpectrum};
pub use hdc::{similarity, EncoderBasis, Hypervector};
pub use memory::{train, AssociativeMemory, TrainOptions, TrainSample};
pub use music::{music_estimate, music_spectrum};
pub use signal::{
    generate_snapshots, sample_covariance, steering_vector, ArrayConfig, CovarianceMatrix,
    SnapshotMatrix, SourceScenario,
};
