//! Core algorithms for uncertainty-aware quadruped foothold prediction and
//! planning: procedural terrain, a synthetic trot-gait oracle, an MLP
//! ensemble with MC-dropout epistemic variance, calibration losses with
//! manual backpropagation, ID/OOD segmentation, costmap construction, an
//! MPPI planner, and support-polygon feasibility margins.
//!
//! The crate is `no_std` (with `alloc`); everything here is a pure function
//! of its inputs, with determinism guaranteed through counter-hashed RNG
//! streams. File formats, CLI, and experiment orchestration live in the
//! companion `footcast` crate.

#![no_std]

extern crate alloc;

pub mod costmap;
pub mod error;
pub mod feasibility;
pub mod gait;
pub mod net;
pub mod ood;
pub mod planner;
pub mod rng;
pub mod terrain;
pub mod train;

pub use error::{Error, Result};
