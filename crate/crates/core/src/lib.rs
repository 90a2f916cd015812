//! Estimation and inference for a two-sample shift-mixture model.
//!
//! Treatment outcomes follow G(u) = (1 − θ)F(u) + θF(u − δ): a fraction θ
//! of units respond with a common shift δ while the rest are unaffected.
//! The crate provides method-of-moments estimators of (θ, δ), their
//! asymptotic and bootstrap confidence intervals, and a seeded Monte Carlo
//! harness for coverage studies.

pub mod asymptotics;
pub mod bootstrap;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod interval;
pub mod normal;
pub mod rng;
pub mod simulation;

pub use distributions::{Family, FamilySpec, MixtureParams, MomentSet};
pub use error::{Error, Result};
pub use estimators::{estimate, EpsilonRule, EstimateResult, TwoSample};
pub use interval::{IntervalMethod, IntervalResult, Target};
pub use rng::Seed;
