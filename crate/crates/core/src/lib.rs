pub mod agent;
pub mod autodiff;
pub mod env;
pub mod error;
pub mod harness;
pub mod nhpi;
pub mod nn;
pub mod rng;
pub mod tpp;

pub use error::{Error, Result};
