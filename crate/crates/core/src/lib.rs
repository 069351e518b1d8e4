pub mod controller;
pub mod duration;
pub mod error;
pub mod harness;
pub mod nn;
pub mod phase;
pub mod sensing;
pub mod sim;

pub use error::{Error, Result};
