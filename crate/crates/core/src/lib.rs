//! Fourier phase and image recovery from the bispectrum of speckle data.

pub mod bispectrum;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod init;
pub mod io;
pub mod objectives;
pub mod optim;
pub mod sparse;
pub mod speckle;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
