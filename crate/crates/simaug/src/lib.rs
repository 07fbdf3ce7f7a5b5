//! File formats, on-disk dataset generation, experiment drivers and the
//! `simaug` command line on top of `simaug_core`.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod formats;
pub mod images;
pub mod run;

pub use simaug_core as core;
