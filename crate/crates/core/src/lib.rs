//! Joint survival super learner.
//!
//! Fits libraries of conditional cumulative-hazard learners for two
//! event causes and for censoring, composes each triple into an
//! observed-data state occupation function, ranks all triples by
//! repeated cross-validated integrated Brier score, and selects the
//! best triple. Ships a Cox-Weibull simulator and an evaluation harness
//! (IPCW baselines, IPA, oracle selector) for benchmarking.

pub mod benchmark;
pub mod composition;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod hazard;
pub mod learners;
pub mod manifest;
pub mod prediction;
pub mod quadrature;
pub mod scoring;
pub mod seeding;
pub mod simulation;
pub mod verification;

pub use error::{Error, Result};
