pub mod averaging;
pub mod error;
pub mod fbm;
pub mod experiment;
pub mod field;
pub mod quadrature;
pub mod rng;
pub mod space;
pub mod stats;
pub mod verifier;
pub mod young;

pub use error::{Error, Result};
