//! Weighted least-squares recovery of functions from point samples.
//!
//! The crate builds the pieces of a sampling-recovery pipeline on one-dimensional
//! measure spaces:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`basis`] | orthonormal systems, projections, nested bases, model classes |
//! | [`density`] | the two-part sampling density, its tail normalizer and a sampler |
//! | [`estimator`] | weighted design matrix, pseudoinverse recovery, error certificate |
//! | [`subsample`] | barrier-potential frame sparsifier that keeps O(n) rows |
//! | [`analysis`] | hat-class closed forms, worst-case search, Monte-Carlo trials, rate fits |
//!
//! Functions are complex valued; all norms are Hermitian.
//!
//! ```
//! use sampling_recovery::basis::{MeasureSpace, OrthonormalSystem};
//! use sampling_recovery::density::{SamplingDensity, WeightMode};
//! use sampling_recovery::estimator::WeightedDesign;
//!
//! let system = OrthonormalSystem::fourier(MeasureSpace::torus(256).unwrap()).unwrap();
//! let density = SamplingDensity::new(&system, 4, WeightMode::power(0.75), None).unwrap();
//! let points = density.sample_points(40, 7).unwrap();
//! let design = WeightedDesign::assemble(&system, &density, &points).unwrap();
//! assert!(design.is_full_rank());
//! ```

pub mod analysis;
pub mod basis;
pub mod density;
mod error;
pub mod estimator;
pub mod linalg;
pub mod series;
pub mod subsample;

pub use error::{Error, Result};

/// Complex scalar used for basis values, coefficients and design entries.
pub type C64 = nalgebra::Complex<f64>;
