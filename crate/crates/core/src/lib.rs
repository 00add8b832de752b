#[cfg(feature = "server")]
pub mod cli;
pub mod corpus;
pub mod error;
pub mod generation;
pub mod model;
pub mod nn;
#[cfg(feature = "server")]
pub mod service;
pub mod training;

pub use error::{Error, Result};
