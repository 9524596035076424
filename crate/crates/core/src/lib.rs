//! Spherical Fourier analysis on rank-one noncompact symmetric spaces and
//! their products, at desk scale.
//!
//! The geometric primitives (`space`, the cutoffs in `kernels`, Θ_p and d_p in
//! `mult`, the 2×2 model in `group`) are generic over [`num_traits::Float`];
//! the spectral machinery works in `f64`/[`Complex64`]. The aliases below fix
//! the scalar used throughout the crate.

pub mod error;
pub mod group;
pub mod harness;
pub mod kernels;
pub mod mult;
pub mod numeric;
pub mod report;
pub mod space;
pub mod specfun;
pub mod sphfn;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use report::{EstimateReport, Verdict};
pub use space::{Exponent, ProductSpace, RankOneSpace};

/// Scalar type of the spectral computations.
pub type Real = f64;
/// Complex scalar of the spectral computations.
pub type Cplx = Complex64;
