pub mod coding;
pub mod conditioned;
pub mod error;
pub mod forest;
pub mod invariance;
pub mod io;
pub mod law;
pub mod plot;
pub mod realpath;
pub mod realtree;
pub mod rng;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
