pub mod association;
pub mod bench;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lifecycle;
pub mod motion;
pub mod preprocessing;
pub mod sim;

pub use error::{Error, Result};
