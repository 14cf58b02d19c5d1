//! Fairness-aware linear regression and classification built around a
//! two-stage discrimination remover: the first stage regresses the
//! non-sensitive attributes on the sensitive ones and keeps only the
//! residuals, the second stage trains an ordinary linear learner on those
//! residuals plus the explanatory attributes.
//!
//! The crate also ships the surrounding machinery needed to run experiments
//! end to end: dataset ingestion with declarative schemas, fairness metrics
//! (p%-rule, mean distance, sensitive-attribute AUC, correlation
//! coefficient), a synthetic data generator, and deterministic seeded
//! sampling so every run is reproducible from its seed.

// index loops mirror the row/column arithmetic; iterator forms read worse here
#![allow(clippy::needless_range_loop)]

pub mod datamodel;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod metrics;
pub mod synth;
pub mod twostage;

pub use error::{Error, Result};
pub use linalg::{Matrix, Rng};
