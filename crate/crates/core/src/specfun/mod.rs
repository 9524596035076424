//! Special functions: the normalized Bessel kernel, the c-function and the
//! coefficients of the Harish-Chandra series.

pub mod bessel;
pub mod cfunction;
pub mod hc;

pub use bessel::{bessel_cj, bessel_cj_real, bessel_cj_scaled};
pub use cfunction::{c_check_inverse, c_function, c_inverse, plancherel_constant, plancherel_density, CFunctionValue, CSource};
pub use hc::{gamma_ell, hc_fit, omega_partial, GammaCoefficients};
