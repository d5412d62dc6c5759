//! Laws of privatized records: pushed-forward distributions, means and
//! covariances.

use nalgebra::DMatrix;

use super::randomizers::{bitflip_keep_probability, exponential_law};
use crate::error::{invalid, Result};
use crate::stats::{ProbabilityVector, SymMatrix};

/// Distribution of one exponential-mechanism output when the input is drawn
/// from `p`: `p·e^ε/(e^ε+d−1) + (1−p)/(e^ε+d−1)`.
pub fn pushed_exp_distribution(p: &ProbabilityVector, epsilon: f64) -> Result<ProbabilityVector> {
    if !(epsilon >= 0.0) {
        return invalid(format!("epsilon must be nonnegative, got {epsilon}"));
    }
    let (keep, other) = exponential_law(epsilon, p.dim());
    let out: Vec<f64> = p.as_slice().iter().map(|&pj| pj * keep + (1.0 - pj) * other).collect();
    // Exact on the simplex up to rounding; renormalize to absorb it.
    let total: f64 = out.iter().sum();
    ProbabilityVector::new(out.into_iter().map(|x| x / total).collect())
}

/// `α_ε = (e^{ε/2} − 1)/(e^{ε/2} + 1)`, the signal retained per bit.
pub fn bitflip_alpha(epsilon: f64) -> f64 {
    (0.25 * epsilon).tanh()
}

/// `e^{ε/2}/(e^{ε/2}+1)²`, the per-bit coin-flip variance.
pub fn bitflip_diffusion(epsilon: f64) -> f64 {
    let keep = bitflip_keep_probability(epsilon);
    keep * (1.0 - keep)
}

/// Mean of one bit-flip report when the input is drawn from `p`:
/// `((e^{ε/2}−1)p + 1)/(e^{ε/2}+1)`. Entries do not sum to one.
pub fn pushed_bitflip_mean(p: &ProbabilityVector, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0) {
        return invalid(format!("epsilon must be nonnegative, got {epsilon}"));
    }
    Ok(bitflip_mean_of(p.as_slice(), epsilon))
}

pub(crate) fn bitflip_mean_of(p: &[f64], epsilon: f64) -> Vec<f64> {
    let alpha = bitflip_alpha(epsilon);
    let flip = 1.0 - bitflip_keep_probability(epsilon);
    p.iter().map(|&pj| alpha * pj + flip).collect()
}

/// Covariance of one bit-flip report:
/// `α_ε²[Diag(p) − ppᵀ] + e^{ε/2}/(e^{ε/2}+1)² · I`.
///
/// Requires every entry of `p` to be positive. The all-ones vector is always
/// an eigenvector, with eigenvalue equal to the diffusion term.
pub fn bitflip_covariance(p: &ProbabilityVector, epsilon: f64) -> Result<SymMatrix> {
    p.require_interior()?;
    if !(epsilon >= 0.0) {
        return invalid(format!("epsilon must be nonnegative, got {epsilon}"));
    }
    Ok(bitflip_covariance_of(p.as_slice(), epsilon))
}

pub(crate) fn bitflip_covariance_of(p: &[f64], epsilon: f64) -> SymMatrix {
    let d = p.len();
    let a2 = bitflip_alpha(epsilon).powi(2);
    let diffusion = bitflip_diffusion(epsilon);
    let m = DMatrix::from_fn(d, d, |i, j| {
        let base = if i == j { p[i] - p[i] * p[i] } else { -p[i] * p[j] };
        a2 * base + if i == j { diffusion } else { 0.0 }
    });
    SymMatrix::new(m).expect("constructed symmetric")
}

/// `Diag(p) − ppᵀ + σ·I`, the covariance of one noisy one-hot record whose
/// noise has per-coordinate variance `σ`.
pub(crate) fn noisy_multinomial_covariance(p: &[f64], sigma: f64) -> SymMatrix {
    let d = p.len();
    let m = DMatrix::from_fn(d, d, |i, j| if i == j { p[i] - p[i] * p[i] + sigma } else { -p[i] * p[j] });
    SymMatrix::new(m).expect("constructed symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::invert_spd;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exp_uniform_is_fixed_point() {
        let u = ProbabilityVector::uniform(5).unwrap();
        let out = pushed_exp_distribution(&u, 1.3).unwrap();
        assert!(out.as_slice().iter().all(|x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn exp_point_mass() {
        let out = pushed_exp_distribution(&pv(&[1.0, 0.0, 0.0]), 2f64.ln()).unwrap();
        for (a, b) in out.as_slice().iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_large_epsilon_limit() {
        let p = pv(&[0.1, 0.2, 0.7]);
        let out = pushed_exp_distribution(&p, 40.0).unwrap();
        for (a, b) in out.as_slice().iter().zip(p.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bitflip_mean_examples() {
        let m = pushed_bitflip_mean(&pv(&[0.5, 0.5]), 2.0 * 3f64.ln()).unwrap();
        // ((3 − 1)·½ + 1)/4 = ½
        assert!(m.iter().all(|x| (x - 0.5).abs() < 1e-14));

        let p = pv(&[0.1, 0.9]);
        let m = pushed_bitflip_mean(&p, 40.0).unwrap();
        assert!((m[0] - 0.1).abs() < 1e-8 && (m[1] - 0.9).abs() < 1e-8);

        let e = std::f64::consts::E;
        let want = ((e - 1.0) / 4.0 + 1.0) / (e + 1.0);
        let m = pushed_bitflip_mean(&ProbabilityVector::uniform(4).unwrap(), 2.0).unwrap();
        assert!(m.iter().all(|x| (x - want).abs() < 1e-14));
        assert!((want - 0.384471).abs() < 1e-6);
    }

    #[test]
    fn bitflip_covariance_examples() {
        let s = bitflip_covariance(&pv(&[0.5, 0.5]), 2.0 * 3f64.ln()).unwrap();
        let want = [0.25, -0.0625, -0.0625, 0.25];
        for (a, b) in s.as_matrix().as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let inv = invert_spd(&s).unwrap();
        assert!((inv.get(0, 0) * 0.25 + inv.get(0, 1) * -0.0625 - 1.0).abs() < 1e-12);

        let s0 = bitflip_covariance(&pv(&[0.3, 0.7]), 0.0).unwrap();
        assert!((s0.get(0, 0) - 0.25).abs() < 1e-15 && s0.get(0, 1).abs() < 1e-15);

        assert!(bitflip_covariance(&pv(&[1.0, 0.0]), 1.0).is_err());
    }

    proptest! {
        #[test]
        fn exp_output_contracts_toward_uniform(raw in prop::collection::vec(0.01f64..1.0, 2..8), eps in 0.0f64..6.0) {
            let total: f64 = raw.iter().sum();
            let p = pv(&raw.iter().map(|x| x / total).collect::<Vec<_>>());
            let out = pushed_exp_distribution(&p, eps).unwrap();
            let d = p.dim() as f64;
            let tv = |q: &[f64]| q.iter().map(|x| (x - 1.0 / d).abs()).sum::<f64>() * 0.5;
            prop_assert!((out.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(tv(out.as_slice()) <= tv(p.as_slice()) + 1e-12);
        }

        #[test]
        fn bitflip_covariance_eigen_floor(raw in prop::collection::vec(0.01f64..1.0, 2..8), eps in 0.01f64..6.0) {
            let total: f64 = raw.iter().sum();
            let p = pv(&raw.iter().map(|x| x / total).collect::<Vec<_>>());
            let s = bitflip_covariance(&p, eps).unwrap();
            let floor = bitflip_diffusion(eps);
            prop_assert!(s.eigenvalues()[0] >= floor - 1e-12);
            let ones = s.mul_vec(&vec![1.0; p.dim()]);
            prop_assert!(ones.iter().all(|v| (v - floor).abs() < 1e-12));
        }
    }
}
