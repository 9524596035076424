//! Numerical infrastructure shared by every module.

pub mod diff;
pub mod fit;
pub mod gamma;
pub mod jet;
pub mod ode;
pub mod quad;
pub mod spline;
