//! Time-harmonic Helmholtz scattering by penetrable inhomogeneities.

// `!(x > 0)` also rejects NaN; index loops over coordinates read better than zips
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod conv;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod krylov;
pub mod lippmann;
pub mod radial;
pub mod scalar;
pub mod special;
pub mod volpot;
pub mod waves;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// Double-precision aliases for the common case.
pub type Shape64 = geometry::Shape<f64>;
pub type Grid64 = geometry::Grid<f64>;
pub type Contrast64 = geometry::Contrast<f64>;
pub type MediumField64 = geometry::MediumField<f64>;
pub type DensityField64 = volpot::DensityField<f64>;
pub type FourierDensity64 = waves::FourierDensity<f64>;
pub type IncidentWave64 = waves::IncidentWave<f64>;
pub type ScatterSolution64 = lippmann::ScatterSolution<f64>;
pub type FarFieldPattern64 = lippmann::FarFieldPattern<f64>;
pub type SolverOptions64 = lippmann::SolverOptions<f64>;
pub type RadialMedium64 = radial::RadialMedium<f64>;
pub type TransmissionSpectrum64 = radial::TransmissionSpectrum<f64>;
