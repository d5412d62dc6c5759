use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Privacy parameters: pure-LDP ε, zCDP ρ and approximation slack δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub rho: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, rho: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && rho >= 0.0) || !epsilon.is_finite() || !rho.is_finite() {
            return invalid("epsilon and rho must be finite and nonnegative");
        }
        if epsilon == 0.0 && rho == 0.0 {
            return invalid("at least one of epsilon, rho must be positive");
        }
        if !(0.0..1.0).contains(&delta) {
            return invalid(format!("delta must lie in [0, 1), got {delta}"));
        }
        Ok(Self { epsilon, rho, delta })
    }

    /// Pure ε-LDP budget, with its implied zCDP level ε²/2.
    pub fn pure(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return invalid(format!("epsilon must be positive, got {epsilon}"));
        }
        Self::new(epsilon, budget_ldp_to_zcdp(epsilon)?, 0.0)
    }

    /// ρ-zCDP budget, with ε reported at slack `delta`.
    pub fn zcdp(rho: f64, delta: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return invalid(format!("rho must be positive, got {rho}"));
        }
        Self::new(budget_zcdp_to_ldp(rho, delta)?, rho, delta)
    }
}

/// ε-LDP implies ε²/2-LzCDP.
pub fn budget_ldp_to_zcdp(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return invalid(format!("epsilon must be finite and nonnegative, got {epsilon}"));
    }
    Ok(0.5 * epsilon * epsilon)
}

/// ρ-LzCDP implies (ρ + √(2ρ ln(2/δ)), δ)-LDP.
pub fn budget_zcdp_to_ldp(rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return invalid(format!("rho must be finite and nonnegative, got {rho}"));
    }
    Ok(rho + (2.0 * rho * (2.0 / delta).ln()).sqrt())
}

/// Gaussian ρ whose per-coordinate variance 1/ρ equals that of Laplace(2/ε).
pub fn variance_matched_rho(epsilon: f64) -> f64 {
    epsilon * epsilon / 8.0
}

/// Which local randomizer produced a report, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    GaussianNoise { rho: f64 },
    LaplaceNoise { epsilon: f64 },
    Exponential { epsilon: f64 },
    BitFlip { epsilon: f64 },
}

impl MechanismKind {
    /// Builds a kind from its short name and strictly positive parameter.
    pub fn from_name(name: MechanismName, parameter: f64) -> Result<Self> {
        if !(parameter > 0.0) || !parameter.is_finite() {
            return invalid(format!("{name} parameter must be positive and finite, got {parameter}"));
        }
        Ok(match name {
            MechanismName::Gaussian => Self::GaussianNoise { rho: parameter },
            MechanismName::Laplace => Self::LaplaceNoise { epsilon: parameter },
            MechanismName::Exponential => Self::Exponential { epsilon: parameter },
            MechanismName::BitFlip => Self::BitFlip { epsilon: parameter },
        })
    }

    pub fn name(&self) -> MechanismName {
        match self {
            Self::GaussianNoise { .. } => MechanismName::Gaussian,
            Self::LaplaceNoise { .. } => MechanismName::Laplace,
            Self::Exponential { .. } => MechanismName::Exponential,
            Self::BitFlip { .. } => MechanismName::BitFlip,
        }
    }

    /// ρ for Gaussian noise, ε otherwise.
    pub fn parameter(&self) -> f64 {
        match *self {
            Self::GaussianNoise { rho } => rho,
            Self::LaplaceNoise { epsilon } | Self::Exponential { epsilon } | Self::BitFlip { epsilon } => epsilon,
        }
    }

    /// The privacy guarantee this randomizer provides per record.
    pub fn budget(&self, delta: f64) -> Result<PrivacyBudget> {
        match *self {
            Self::GaussianNoise { rho } => {
                if delta > 0.0 {
                    PrivacyBudget::zcdp(rho, delta)
                } else {
                    PrivacyBudget::new(0.0, rho, 0.0)
                }
            }
            _ => PrivacyBudget::pure(self.parameter()),
        }
    }
}

/// Mechanism family without its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechanismName {
    Gaussian,
    Laplace,
    Exponential,
    BitFlip,
}

impl MechanismName {
    pub const ALL: [MechanismName; 4] = [Self::Gaussian, Self::Laplace, Self::Exponential, Self::BitFlip];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Laplace => "laplace",
            Self::Exponential => "exponential",
            Self::BitFlip => "bitflip",
        }
    }
}

impl fmt::Display for MechanismName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(Self::Gaussian),
            "laplace" => Ok(Self::Laplace),
            "exponential" | "exp" => Ok(Self::Exponential),
            "bitflip" | "bit-flip" | "bit_flip" => Ok(Self::BitFlip),
            other => invalid(format!("unknown mechanism '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ldp_to_zcdp() {
        assert_eq!(budget_ldp_to_zcdp(2.0).unwrap(), 2.0);
        assert_eq!(budget_ldp_to_zcdp(1.0).unwrap(), 0.5);
    }

    #[test]
    fn variance_matching_cross_check() {
        // Laplace(2/ε) has variance 8/ε²; the matched Gaussian has variance 1/ρ.
        let eps = 2.0;
        let rho = variance_matched_rho(eps);
        let laplace_var = 2.0 * (2.0 / eps) * (2.0 / eps);
        assert!((1.0 / rho - laplace_var).abs() < 1e-15);
        assert!((1.0 / rho - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zcdp_to_ldp() {
        let eps = budget_zcdp_to_ldp(0.5, 0.01).unwrap();
        assert!((eps - (0.5 + 200f64.ln().sqrt())).abs() < 1e-12);
        assert!((eps - 2.80181).abs() < 1e-5);
        assert!(budget_zcdp_to_ldp(1e-12, 0.01).unwrap() < 1e-5);
        assert!(budget_zcdp_to_ldp(0.5, 2.0).is_err());
        assert!(budget_zcdp_to_ldp(0.5, 0.0).is_err());
    }

    #[test]
    fn budget_invariants() {
        assert!(PrivacyBudget::new(0.0, 0.0, 0.0).is_err());
        assert!(PrivacyBudget::new(1.0, 0.0, 1.0).is_err());
        assert!(PrivacyBudget::new(1.0, 0.0, 0.5).is_ok());
        let b = PrivacyBudget::pure(2.0).unwrap();
        assert_eq!(b.rho, 2.0);
    }

    #[test]
    fn names_round_trip() {
        for name in MechanismName::ALL {
            assert_eq!(name.as_str().parse::<MechanismName>().unwrap(), name);
        }
        assert!("rappor".parse::<MechanismName>().is_err());
        assert!(MechanismKind::from_name(MechanismName::BitFlip, 0.0).is_err());
    }
}
