//! Heart and lung sound separation from multichannel recordings with
//! multilayer α-divergence NMF, periodicity-based source labeling and an
//! advisory feedback loop on the fundamental frequencies.

pub mod advisor;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod nmf;
pub mod orchestrator;
pub mod periodicity;
pub mod scalar;
pub mod signal;
pub mod spectral;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::{Matrix, NonNegMatrix};
pub use scalar::Scalar;
pub use orchestrator::{Method, SeparationConfig, SeparationResult};
pub use signal::{AffineShift, Lambda2, MixtureSet, Signal};
pub use spectral::{Band, FeatureVector};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type NonNegMatrix64 = NonNegMatrix<f64>;
pub type NonNegMatrix32 = NonNegMatrix<f32>;
pub type Signal64 = Signal<f64>;
pub type Signal32 = Signal<f32>;
pub type MixtureSet64 = MixtureSet<f64>;
pub type FeatureVector64 = FeatureVector<f64>;
pub type SeparationResult64 = SeparationResult<f64>;
pub type SeparationResult32 = SeparationResult<f32>;
