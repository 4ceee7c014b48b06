pub mod analysis;
pub mod classifier;
pub mod clustering;
pub mod data;
pub mod error;
pub mod perturb;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
