//! Zero-temperature dynamics of the Jaynes-Cummings model with cavity
//! losses.

pub mod error;
pub mod model;
pub mod offresonant;
pub mod oracle;
pub mod resonant;
pub mod specfun;

pub use error::{Error, Result};
pub use model::{DressedIndex, ModelParams, Observables, SectorState, TimeSeries};
