//! Handcrafted prognostic pipeline for chest radiographs.
//!
//! The crate is split the way the data flows:
//!
//! * [`imaging`] loads radiographs and lung masks, standardizes and resizes
//!   them, and scores mask overlap.
//! * [`texture`] turns an image and a mask into sliding-window parametric
//!   maps of first-order and co-occurrence statistics, then summarizes each
//!   map into a fixed-length feature vector.
//! * [`tabular`] parses clinical tables, imputes and scales columns, runs the
//!   mutual-information filter and the RFECV wrapper, and hosts the three
//!   learners.
//! * [`evaluation`] plans repeated k-fold and leave-one-centre-out runs,
//!   executes them without train/test leakage, and provides the
//!   nonparametric tests used to compare cohorts and methods.

pub mod error;
pub mod evaluation;
pub mod imaging;
pub mod rng;
pub mod tabular;
pub mod texture;

pub use error::{Error, Result};
