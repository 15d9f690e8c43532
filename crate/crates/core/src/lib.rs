pub mod acceptance;
pub mod config;
pub mod contour;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod harness;
pub mod hele_shaw;
pub mod nonlinear;
pub mod obstacle;
pub mod penalty;
pub mod problems;
pub mod report;
pub mod shapes;
pub mod two_phase;

pub use error::{Error, Result};
