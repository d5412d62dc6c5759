use std::fmt;

use crate::error::{invalid, Result};
use crate::mechanisms::MechanismKind;
use crate::stats::{ProbabilityVector, RngStream};

const MEAN_ZERO_TOL: f64 = 1e-9;

/// Simple null hypothesis `H₀: p = p⁰` with `p⁰` strictly interior.
#[derive(Debug, Clone, PartialEq)]
pub struct GofNull {
    p0: ProbabilityVector,
}

impl GofNull {
    pub fn new(p0: ProbabilityVector) -> Result<Self> {
        p0.require_interior()?;
        if p0.dim() < 2 {
            return invalid("goodness-of-fit null needs at least two categories");
        }
        Ok(Self { p0 })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(ProbabilityVector::uniform(d)?)
    }

    pub fn p0(&self) -> &ProbabilityVector {
        &self.p0
    }

    pub fn dim(&self) -> usize {
        self.p0.dim()
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.dim() as f64;
        self.p0.as_slice().iter().all(|p| (p - u).abs() < 1e-12)
    }
}

/// How an alternative's direction scales with the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlternativeScaling {
    /// `p = p⁰ + Δ/√n`, the local alternative the asymptotic theory uses.
    RootN,
    /// `p = p⁰ + Δ` for every `n` (the fixed-η experiments).
    Fixed,
}

/// A mean-zero perturbation `Δ` of the null.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeSpec {
    delta: Vec<f64>,
    scaling: AlternativeScaling,
}

impl AlternativeSpec {
    pub fn new(delta: Vec<f64>, scaling: AlternativeScaling) -> Result<Self> {
        let sum: f64 = delta.iter().sum();
        if sum.abs() > MEAN_ZERO_TOL {
            return invalid(format!("alternative direction must sum to zero, sums to {sum:e}"));
        }
        Ok(Self { delta, scaling })
    }

    /// `η·(1, −1, …, 1, −1)` at fixed scale; `d` must be even.
    pub fn alternating(d: usize, eta: f64) -> Result<Self> {
        if d % 2 != 0 {
            return invalid(format!("alternating pattern needs an even dimension, got {d}"));
        }
        Self::new(alternating_pattern(d).into_iter().map(|s| s * eta).collect(), AlternativeScaling::Fixed)
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn scaling(&self) -> AlternativeScaling {
        self.scaling
    }

    /// Root-n direction at sample size `n`: `Δ` itself for root-n
    /// alternatives and `√n·Δ` for fixed ones.
    pub fn local_delta(&self, n: u64) -> Vec<f64> {
        match self.scaling {
            AlternativeScaling::RootN => self.delta.clone(),
            AlternativeScaling::Fixed => {
                let s = (n as f64).sqrt();
                self.delta.iter().map(|x| x * s).collect()
            }
        }
    }

    /// The data distribution at sample size `n`.
    pub fn distribution(&self, null: &GofNull, n: u64) -> Result<ProbabilityVector> {
        if self.delta.len() != null.dim() {
            return invalid("alternative and null dimensions differ");
        }
        let scale = match self.scaling {
            AlternativeScaling::RootN => 1.0 / (n as f64).sqrt(),
            AlternativeScaling::Fixed => 1.0,
        };
        let p: Vec<f64> = null.p0().as_slice().iter().zip(&self.delta).map(|(p, d)| p + scale * d).collect();
        if p.iter().any(|x| *x <= 0.0) {
            return invalid("alternative leaves the interior of the simplex");
        }
        ProbabilityVector::new(p)
    }
}

/// `(1, −1, 1, −1, …)` of length `d`.
pub fn alternating_pattern(d: usize) -> Vec<f64> {
    (0..d).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    FailToReject,
}

impl Decision {
    pub fn from_exceedance(statistic: f64, critical_value: f64) -> Self {
        if statistic > critical_value {
            Self::Reject
        } else {
            Self::FailToReject
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Reject => "reject",
            Self::FailToReject => "fail_to_reject",
        }
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, Self::Reject)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: u32,
    pub critical_value: f64,
    /// Present only when the reference law is a chi-square.
    pub p_value: Option<f64>,
    pub decision: Decision,
    pub method: MechanismKind,
    pub n: u64,
    pub d: usize,
    pub alpha: f64,
    /// For Monte-Carlo references: how many reference samples are at least
    /// as large as the statistic.
    pub mc_exceedances: Option<usize>,
}

/// Monte-Carlo reference settings for tests without a chi-square reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub stream: RngStream,
    /// Previously computed critical value for the same `(p⁰, n, ε, α, m)`;
    /// when present no sampling is done.
    pub cached_critical_value: Option<f64>,
}

impl McConfig {
    pub fn new(samples: usize, stream: RngStream) -> Self {
        Self { samples, stream, cached_critical_value: None }
    }

    /// Checks `m > ⌈1/α⌉`.
    pub fn validate(&self, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        let min = ceil_tol(1.0 / alpha) as usize;
        if self.samples <= min {
            return invalid(format!(
                "Monte-Carlo sample count {} must exceed ceil(1/alpha) = {min}",
                self.samples
            ));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Ceiling that ignores floating-point fuzz just above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_requires_interior() {
        assert!(GofNull::new(ProbabilityVector::new(vec![1.0, 0.0]).unwrap()).is_err());
        assert!(GofNull::uniform(1).is_err());
        assert!(GofNull::uniform(4).unwrap().is_uniform());
    }

    #[test]
    fn alternative_must_be_mean_zero() {
        assert!(AlternativeSpec::new(vec![0.1, 0.1], AlternativeScaling::RootN).is_err());
        assert!(AlternativeSpec::alternating(3, 0.01).is_err());
        let alt = AlternativeSpec::alternating(4, 0.01).unwrap();
        let p = alt.distribution(&GofNull::uniform(4).unwrap(), 100).unwrap();
        assert!((p[0] - 0.26).abs() < 1e-15 && (p[1] - 0.24).abs() < 1e-15);
        let local = alt.local_delta(10_000);
        assert!((local[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mc_sample_floor() {
        let s = RngStream::new(0, 0);
        assert!(McConfig::new(10, s).validate(0.05).is_err());
        assert!(McConfig::new(20, s).validate(0.05).is_err());
        assert!(McConfig::new(21, s).validate(0.05).is_ok());
        assert!(McConfig::new(999, s).validate(1.5).is_err());
    }
}
