//! Joint weak measurements of commuting observables at arbitrary coupling
//! strength.

pub mod cli;
pub mod closedform;
pub mod error;
pub mod gaussian_meter;
pub mod grid_oracle;
pub mod hardy;
pub mod hilbert;
pub mod momentum_oracle;
pub mod probes;
pub mod qubit_meter;
pub mod random;
pub mod series;
pub mod weakvalue;

pub use error::{Error, Result};
