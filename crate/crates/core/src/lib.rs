//! Kernel mean embeddings with Gaussian-corruption marginalized estimators.
//!
//! The crate builds up from closed-form marginalized RBF kernels
//! ([`kernels`]) to mean estimators with leave-one-out covariance selection
//! ([`estimators`], [`covariance`]), and applies them to two-sample testing
//! ([`mmd`]), independence testing ([`hsic`]), and density estimation by
//! kernel mean matching ([`density`]). [`synth`] holds the seeded data
//! generators and the exact loss oracle used by the experiment drivers.
//!
//! All numeric code is generic over the scalar type through [`Scalar`]
//! (implemented for `f32` and `f64`); the aliases below pin the common
//! double-precision instantiations.

pub mod covariance;
pub mod data;
pub mod density;
pub mod error;
pub mod estimators;
pub mod hsic;
pub mod kernels;
mod linalg;
pub mod mmd;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DataMatrixF64 = data::DataMatrix<f64>;
pub type BandwidthF64 = kernels::Bandwidth<f64>;
pub type CorruptionModelF64 = kernels::CorruptionModel<f64>;
pub type MeanEstimateF64 = estimators::MeanEstimate<f64>;
pub type EstimatorKindF64 = estimators::EstimatorKind<f64>;
pub type TestResultF64 = mmd::TestResult<f64>;
pub type PairedSampleF64 = hsic::PairedSample<f64>;
pub type GaussianMixtureF64 = density::GaussianMixture<f64>;
pub type MoGSpecF64 = synth::MoGSpec<f64>;

pub type DataMatrixF32 = data::DataMatrix<f32>;
pub type BandwidthF32 = kernels::Bandwidth<f32>;
pub type CorruptionModelF32 = kernels::CorruptionModel<f32>;
pub type MeanEstimateF32 = estimators::MeanEstimate<f32>;
