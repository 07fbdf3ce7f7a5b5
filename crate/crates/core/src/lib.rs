//! Randomized action-video simulation: skeletal motion, nuisance sampling,
//! a deterministic software renderer, and domain-transfer training.
//!
//! This crate is `no_std` (it needs `alloc`) and performs no IO. File
//! formats, dataset generation on disk, and the command-line tool live in
//! the `simaug` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod genmodel;
pub mod harness;
pub mod learn;
pub mod math;
pub mod motion;
pub mod randomize;
pub mod render;
pub mod rng;
pub mod texture;
