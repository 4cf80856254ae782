//! Simulator for the four-photon entanglement-swapping experiment.
//!
//! Two singlet pairs (photons 0,1 and 2,3) are prepared, photons 1 and 2
//! undergo a Bell-state measurement and photons 0 and 3 are measured with
//! polarization analyzers, in either temporal order. The crate provides exact
//! outcome tables, seeded sampling, CHSH estimation with post-selection, and
//! classical hidden-variable models with record-comparing discard rules.

pub mod analysis;
pub mod classical;
pub mod entanglement;
mod error;
pub mod format;
pub mod measure;
pub mod protocol;
pub mod qstate;
pub mod records;
pub mod rng;

pub use error::{Result, SimError};
pub use num_complex::Complex64;
