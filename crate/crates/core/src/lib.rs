//! Numerical companion library for restricted-isometry and restricted
//! conformal-property experiments: ensemble generation, restricted spectra,
//! isometry/orthogonality constants, angle-preservation bounds, orthant
//! diagnostics, Wishart eigenvalue statistics, and push-broom imaging
//! simulations.

pub mod ensembles;
pub mod error;
pub mod io;
pub mod manifest;
pub mod orthant;
pub mod pushbroom;
pub mod rcpcalc;
pub mod ripcalc;
pub mod rng;
pub mod spectra;
pub mod wishstat;

pub use error::{Error, Result};
