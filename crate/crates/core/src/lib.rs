//! Core library for double-incomplete multi-view multi-label classification.
//!
//! Everything in this crate is pure computation over dense `f64` matrices:
//! a reverse-mode autodiff graph ([`graph`]), the per-view autoencoder model
//! with indicator-weighted fusion ([`model`]), the masked training objectives
//! ([`losses`]), the mini-batch trainer with its dual stopping rule
//! ([`trainer`]), mask/split/synthesis utilities for double-incomplete data
//! ([`data`]), and multi-label ranking metrics ([`metrics`]).
//!
//! The crate is `no_std` (alloc required). IO, file formats, and the CLI live
//! in the companion `dicnet-cli` crate; wall-clock time enters only through
//! the [`trainer::Clock`] trait.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
mod fmath;
pub mod gradcheck;
pub mod graph;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod params;
pub mod trainer;

pub use error::{CoreError, Result};
pub use matrix::Matrix;
