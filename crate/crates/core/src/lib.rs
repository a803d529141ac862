pub mod align;
pub mod binning;
pub mod clt;
pub mod cluster;
pub mod embed;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Embedding64 = embed::Embedding<f64>;
pub type Embedding32 = embed::Embedding<f32>;
pub type UnfoldedIntensity64 = binning::UnfoldedIntensity<f64>;
pub type UnfoldedIntensity32 = binning::UnfoldedIntensity<f32>;
pub type BinnedPositions64 = binning::BinnedPositions<f64>;
pub type TruncatedSvd64 = embed::TruncatedSvd<f64>;
