pub mod chain;
pub mod cli;
pub mod coupon;
pub mod dgr;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod mc;
pub mod process;

pub use error::{Error, Result};
