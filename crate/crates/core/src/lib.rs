//! Locally differentially private chi-square hypothesis tests.
//!
//! Three local randomizers (additive noise, a generalized randomized
//! response built on the exponential mechanism, and independent bit
//! flipping) feed three goodness-of-fit tests and three independence tests.
//! The [`sim`] module runs seeded Type-I and power experiments over them.
//!
//! Module layout:
//!
//! * [`stats`] chi-square distributions, samplers, small dense linear algebra
//! * [`mechanisms`] randomizers, their pushed-forward laws, privacy budgets
//! * [`gof`] goodness-of-fit statistics, decision rules, noncentrality
//! * [`independence`] contingency tables, marginal estimators, minimum chi-square
//! * [`sim`] experiment configuration, parallel runners, CSV output

pub mod error;
pub mod gof;
pub mod independence;
pub mod mechanisms;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
