//! Controller synthesis for partially known stochastic systems from noise
//! samples, via interval abstractions with coarse block constraints.

pub mod abstraction;
pub mod automata;
pub mod bench;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod interval;
pub mod pipeline;
pub mod presets;
pub mod samples;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
