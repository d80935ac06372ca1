pub mod certificate;
pub mod cli;
pub mod error;
pub mod cohomology;
pub mod diagnostics;
pub mod dynamics;
pub mod fourier;
pub mod frames;
pub mod ledger;
pub mod newton;

pub use error::{Error, Result};
