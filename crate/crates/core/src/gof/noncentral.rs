//! Noncentrality parameters of the limiting distributions under local
//! alternatives, and the power they predict.

use super::procedures::laplace_sigma;
use super::types::GofNull;
use crate::error::{invalid, Result};
use crate::mechanisms::{
    bitflip_alpha, bitflip_covariance_of, bitflip_diffusion, exponential_law, noisy_multinomial_covariance,
    pushed_exp_distribution, variance_matched_rho, MechanismKind, MechanismName,
};
use crate::stats::{chi2_quantile, invert_spd, noncentral_chi2_sf};

/// Noncentrality `λ` of the statistic's limit under `p = p⁰ + Δ/√n`.
///
/// * Gaussian(ρ): `Δᵀ(Diag(p⁰) − p⁰p⁰ᵀ + (1/ρ)I)⁻¹Δ`
/// * Laplace(ε): the Gaussian expression with the matched variance 8/ε²
///   (the Laplace sum is asymptotically normal)
/// * Exponential(ε): `((e^ε−1)/(e^ε+d−1))² Σ_j Δ_j²/p̌⁰_j`
/// * BitFlip(ε): `α_ε² ΔᵀΣ(p⁰)⁻¹Δ`
pub fn noncentral_lambda(kind: MechanismKind, null: &GofNull, delta: &[f64]) -> Result<f64> {
    let d = null.dim();
    if delta.len() != d {
        return invalid(format!("delta has length {}, null has dimension {d}", delta.len()));
    }
    let sum: f64 = delta.iter().sum();
    if sum.abs() > 1e-9 {
        return invalid(format!("delta must sum to zero, sums to {sum:e}"));
    }
    if delta.iter().all(|x| *x == 0.0) {
        return Ok(0.0);
    }
    let p = null.p0().as_slice();
    match kind {
        MechanismKind::GaussianNoise { rho } => {
            if !(rho > 0.0) {
                return invalid(format!("rho must be positive, got {rho}"));
            }
            gaussian_lambda(p, 1.0 / rho, delta)
        }
        MechanismKind::LaplaceNoise { epsilon } => {
            if !(epsilon > 0.0) {
                return invalid(format!("epsilon must be positive, got {epsilon}"));
            }
            gaussian_lambda(p, laplace_sigma(epsilon), delta)
        }
        MechanismKind::Exponential { epsilon } => {
            if !(epsilon > 0.0) {
                return invalid(format!("epsilon must be positive, got {epsilon}"));
            }
            let (keep, other) = exponential_law(epsilon, d);
            let pushed = pushed_exp_distribution(null.p0(), epsilon)?;
            let weighted: f64 = delta.iter().zip(pushed.as_slice()).map(|(x, q)| x * x / q).sum();
            Ok((keep - other).powi(2) * weighted)
        }
        MechanismKind::BitFlip { epsilon } => {
            if !(epsilon > 0.0) {
                return invalid(format!("epsilon must be positive, got {epsilon}"));
            }
            let inv = invert_spd(&bitflip_covariance_of(p, epsilon))?;
            Ok(bitflip_alpha(epsilon).powi(2) * inv.quadratic_form(delta))
        }
    }
}

fn gaussian_lambda(p: &[f64], sigma: f64, delta: &[f64]) -> Result<f64> {
    let inv = invert_spd(&noisy_multinomial_covariance(p, sigma))?;
    Ok(inv.quadratic_form(delta))
}

/// Coefficient on `ΔᵀΔ` in the noncentrality under the uniform null, for
/// mean-zero `Δ`, with Gaussian noise at the variance-matched `ρ = ε²/8`:
///
/// * Exponential: `d((e^ε−1)/(e^ε+d−1))²`
/// * BitFlip: `α_ε²/(α_ε²/d + e^{ε/2}/(e^{ε/2}+1)²)`
/// * Gaussian (and Laplace): `1/(1/d + 1/ρ)`
pub fn uniform_null_coefficient(mechanism: MechanismName, d: usize, epsilon: f64) -> Result<f64> {
    if d <= 2 {
        return invalid(format!("uniform-null coefficients are compared for d > 2, got {d}"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
    }
    let df = d as f64;
    Ok(match mechanism {
        MechanismName::Exponential => {
            let (keep, other) = exponential_law(epsilon, d);
            df * (keep - other).powi(2)
        }
        MechanismName::BitFlip => {
            let a2 = bitflip_alpha(epsilon).powi(2);
            a2 / (a2 / df + bitflip_diffusion(epsilon))
        }
        MechanismName::Gaussian | MechanismName::Laplace => 1.0 / (1.0 / df + 1.0 / variance_matched_rho(epsilon)),
    })
}

/// Asymptotic power `P(χ²_{d−1}(λ) > χ²_{d−1,1−α})`.
pub fn predicted_power(dof: u32, lambda: f64, alpha: f64) -> Result<f64> {
    let critical = chi2_quantile(dof, 1.0 - alpha)?;
    noncentral_chi2_sf(dof, lambda, critical)
}
