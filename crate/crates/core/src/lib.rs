pub mod cli_io;
pub mod error;
pub mod optimize;
pub mod particle;
pub mod quadrature;
pub mod spectral;
pub mod stationarity;
pub mod string_action;
pub mod string_spectrum;

pub use error::{QapError, Result};
