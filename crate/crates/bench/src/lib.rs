//! Experiment driver for `xlris-core`: configuration files and flags, file
//! formats, the dictionary cache and seeded Monte-Carlo campaigns.

pub mod cache;
pub mod campaign;
pub mod cli;
pub mod clock;
pub mod config;
pub mod experiments;
pub mod formats;

pub use campaign::Method;
pub use clock::WallClock;
