pub mod bench;
pub mod cli;
pub mod cluster;
pub mod error;
pub mod io;
pub mod lap;
mod linalg;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod unicity;

pub use error::{Error, Result};
