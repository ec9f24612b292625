//! Weak-error simulation for SDEs driven by symmetric α-stable noise with
//! drifts in negative-order Besov spaces.

pub mod cli;
pub mod drift;
pub mod error;
pub mod euler;
pub mod heatkernel;
pub mod io;
pub mod levy;
pub mod littlewood_paley;
pub mod quad;
pub mod spectral;
pub mod stats;
pub mod stream;
pub mod weak_error;

pub use error::{Error, Result};
