//! Goodness-of-fit statistics on (possibly noisy) histograms.

use super::types::GofNull;
use crate::error::{invalid, Result};
use crate::mechanisms::{bitflip_covariance_of, bitflip_mean_of, noisy_multinomial_covariance};
use crate::stats::{center, centering_projector, invert_spd, Histogram, NoisyHistogram, SymMatrix};

/// Classical Pearson statistic `Σ (H_j − n p⁰_j)² / (n p⁰_j)`.
pub fn stat_classical(h: &Histogram, null: &GofNull) -> Result<f64> {
    if h.n() == 0 {
        return invalid("histogram is empty");
    }
    pearson(&h.to_noisy(), null.p0().as_slice())
}

/// Pearson statistic evaluated on noisy counts `H + Z`, using the record
/// count `n` (not the noisy total) for the expected counts.
pub fn stat_glrv(nh: &NoisyHistogram, null: &GofNull) -> Result<f64> {
    pearson(nh, null.p0().as_slice())
}

pub(crate) fn pearson(nh: &NoisyHistogram, p: &[f64]) -> Result<f64> {
    if nh.dim() != p.len() {
        return invalid(format!("histogram has {} cells, null has {}", nh.dim(), p.len()));
    }
    if let Some(j) = p.iter().position(|x| *x <= 0.0) {
        return invalid(format!("null probability at index {j} is zero"));
    }
    let n = nh.n() as f64;
    Ok(nh.values().iter().zip(p).map(|(h, p)| (h - n * p).powi(2) / (n * p)).sum())
}

/// Inverse of `c` sandwiched by the centering projector, `Π c⁻¹ Π`, for a
/// covariance `c` that has the all-ones vector as an eigenvector.
///
/// Adding `s·11ᵀ` only moves the eigenvalue on the ones direction, which Π
/// removes, so the shifted matrix gives the same product while staying well
/// conditioned when that eigenvalue is tiny.
pub(crate) fn projected_inverse(c: &SymMatrix) -> Result<SymMatrix> {
    let d = c.order();
    let mut shifted = c.as_matrix().clone();
    let s = shifted.trace() / (d * d) as f64;
    shifted.add_scalar_mut(s);
    let inv = invert_spd(&SymMatrix::new(shifted)?)?;
    Ok(inv.sandwich(&centering_projector(d)?))
}

/// Projected quadratic-form statistic `n·vᵀ M v` with `v = y/n − center`.
#[derive(Debug, Clone)]
pub struct ProjectedForm {
    middle: SymMatrix,
    center: Vec<f64>,
}

impl ProjectedForm {
    /// Noise-aware form for additive noise of per-record variance `sigma`:
    /// `M_σ = Π (Diag(p⁰ + σ) − p⁰p⁰ᵀ)⁻¹ Π`, centered at `p⁰`.
    pub fn noise(null: &GofNull, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid(format!("sigma must be positive and finite, got {sigma}"));
        }
        let p = null.p0().as_slice();
        let middle = projected_inverse(&noisy_multinomial_covariance(p, sigma))?;
        Ok(Self { middle, center: p.to_vec() })
    }

    /// Bit-flip form `Π Σ(p⁰)⁻¹ Π`, centered at the pushed mean `p̃⁰`.
    pub fn bitflip(null: &GofNull, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return invalid(format!("epsilon must be positive, got {epsilon}"));
        }
        let p = null.p0().as_slice();
        let sigma = bitflip_covariance_of(p, epsilon);
        let middle = invert_spd(&sigma)?.sandwich(&centering_projector(p.len())?);
        Ok(Self { middle, center: bitflip_mean_of(p, epsilon) })
    }

    pub fn middle(&self) -> &SymMatrix {
        &self.middle
    }

    pub fn evaluate(&self, nh: &NoisyHistogram) -> Result<f64> {
        if nh.dim() != self.center.len() {
            return invalid(format!("histogram has {} cells, expected {}", nh.dim(), self.center.len()));
        }
        let n = nh.n() as f64;
        let v: Vec<f64> = nh.values().iter().zip(&self.center).map(|(y, c)| y / n - c).collect();
        // Π is idempotent and the middle already carries it; centering v
        // first only removes rounding along the ones direction.
        Ok(n * self.middle.quadratic_form(&center(&v)))
    }
}

/// Projected statistic `n·((H+Z)/n − p⁰)ᵀ M_σ ((H+Z)/n − p⁰)`.
pub fn stat_projected(nh: &NoisyHistogram, null: &GofNull, sigma: f64) -> Result<f64> {
    ProjectedForm::noise(null, sigma)?.evaluate(nh)
}

/// Bit-flip statistic `n (H̃/n − p̃⁰)ᵀ Π Σ(p⁰)⁻¹ Π (H̃/n − p̃⁰)`.
pub fn stat_bitflip(nh: &NoisyHistogram, null: &GofNull, epsilon: f64) -> Result<f64> {
    ProjectedForm::bitflip(null, epsilon)?.evaluate(nh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ProbabilityVector;
    use proptest::prelude::*;

    fn uniform4() -> GofNull {
        GofNull::uniform(4).unwrap()
    }

    #[test]
    fn classical_examples() {
        let h = Histogram::new(vec![25, 25, 25, 25]);
        assert_eq!(stat_classical(&h, &uniform4()).unwrap(), 0.0);
        let h = Histogram::new(vec![30, 20, 25, 25]);
        assert!((stat_classical(&h, &uniform4()).unwrap() - 2.0).abs() < 1e-12);
        assert!(stat_classical(&Histogram::new(vec![0, 0, 0, 0]), &uniform4()).is_err());
    }

    #[test]
    fn glrv_examples() {
        let h = Histogram::new(vec![30, 20, 25, 25]);
        assert_eq!(stat_glrv(&h.to_noisy(), &uniform4()).unwrap(), stat_classical(&h, &uniform4()).unwrap());
        let nh = NoisyHistogram::new(vec![31.0, 19.0, 25.0, 25.0], 100).unwrap();
        assert!((stat_glrv(&nh, &uniform4()).unwrap() - 2.88).abs() < 1e-12);
    }

    #[test]
    fn projected_annihilates_constant_shift() {
        let null = GofNull::new(ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap()).unwrap();
        // v = c·1 ⇔ y = n(p⁰ + c)
        let n = 1000u64;
        let y: Vec<f64> = null.p0().as_slice().iter().map(|p| n as f64 * (p + 0.37)).collect();
        let q = stat_projected(&NoisyHistogram::new(y, n).unwrap(), &null, 0.5).unwrap();
        assert!(q.abs() < 1e-9, "{q}");
    }

    #[test]
    fn projected_rejects_bad_sigma() {
        let nh = NoisyHistogram::new(vec![1.0; 4], 4).unwrap();
        assert!(stat_projected(&nh, &uniform4(), 0.0).is_err());
        assert!(stat_projected(&nh, &uniform4(), -1.0).is_err());
    }

    /// Direct evaluation of `n vᵀ Π (Diag(p⁰+σ) − p⁰p⁰ᵀ)⁻¹ Π v` without the
    /// ones-direction shift.
    fn projected_direct(y: &[f64], n: u64, p: &[f64], sigma: f64) -> f64 {
        let d = p.len();
        let c = noisy_multinomial_covariance(p, sigma);
        let inv = invert_spd(&c).unwrap();
        let pi = centering_projector(d).unwrap();
        let m = inv.sandwich(&pi);
        let v: Vec<f64> = y.iter().zip(p).map(|(y, p)| y / n as f64 - p).collect();
        n as f64 * m.quadratic_form(&v)
    }

    #[test]
    fn shifted_inverse_matches_direct() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let null = GofNull::new(ProbabilityVector::new(p.to_vec()).unwrap()).unwrap();
        let y = [95.0, 230.0, 280.0, 410.0];
        for sigma in [0.01, 0.5, 8.0] {
            let a = stat_projected(&NoisyHistogram::new(y.to_vec(), 1000).unwrap(), &null, sigma).unwrap();
            let b = projected_direct(&y, 1000, &p, sigma);
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "sigma {sigma}: {a} vs {b}");
        }
    }

    #[test]
    fn vanishing_noise_is_stable() {
        let h = Histogram::new(vec![25, 25, 25, 25]);
        let q = stat_projected(&h.to_noisy(), &uniform4(), 1e-12).unwrap();
        assert!(q.abs() < 1e-9);
    }

    #[test]
    fn bitflip_examples() {
        let null = GofNull::new(ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap()).unwrap();
        let eps = 2.0;
        let n = 5000u64;
        let mean = bitflip_mean_of(null.p0().as_slice(), eps);
        let exact: Vec<f64> = mean.iter().map(|m| m * n as f64).collect();
        let q = stat_bitflip(&NoisyHistogram::new(exact.clone(), n).unwrap(), &null, eps).unwrap();
        assert!(q.abs() < 1e-9);

        let off = vec![2600.0, 1900.0, 2750.0, 3100.0];
        let q0 = stat_bitflip(&NoisyHistogram::new(off.clone(), n).unwrap(), &null, eps).unwrap();
        let shifted: Vec<f64> = off.iter().map(|x| x + 17.5).collect();
        let q1 = stat_bitflip(&NoisyHistogram::new(shifted, n).unwrap(), &null, eps).unwrap();
        assert!((q0 - q1).abs() < 1e-9, "{q0} vs {q1}");
    }

    proptest! {
        #[test]
        fn larger_sigma_shrinks_statistic(
            raw in prop::collection::vec(0.05f64..1.0, 3..6),
            noise in prop::collection::vec(-50.0f64..50.0, 6),
            sigma in 0.01f64..5.0,
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let d = p.len();
            let null = GofNull::new(ProbabilityVector::new(p.clone()).unwrap()).unwrap();
            let n = 500u64;
            let y: Vec<f64> = p.iter().zip(&noise).map(|(p, z)| n as f64 * p + z).collect();
            let v: Vec<f64> = y.iter().zip(&p).map(|(y, p)| y / n as f64 - p).collect();
            prop_assume!(center(&v).iter().map(|x| x * x).sum::<f64>() > 1e-12);
            let nh = NoisyHistogram::new(y, n).unwrap();
            let a = stat_projected(&nh, &null, sigma).unwrap();
            let b = stat_projected(&nh, &null, 2.0 * sigma).unwrap();
            prop_assert!(b < a, "d={} sigma={} {} !< {}", d, sigma, b, a);
        }
    }
}
