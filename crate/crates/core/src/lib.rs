//! Discrete multi-martingale optimal transport.

pub mod cli;
pub mod cost;
pub mod error;
pub mod geometry;
pub mod lp;
pub mod measures;
pub mod mmot;
pub mod reproduce;
pub mod scenario;
pub mod structure;
pub mod transforms;

pub use error::{Error, Result};
