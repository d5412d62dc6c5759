//! Exact samplers for multinomial counts and Laplace sums.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};

use super::types::{Histogram, ProbabilityVector};
use crate::error::{invalid, Result};

/// Draws `Multinomial(n, p)` by sequential conditional binomials.
pub fn sample_histogram<R: Rng + ?Sized>(n: u64, p: &ProbabilityVector, rng: &mut R) -> Result<Histogram> {
    if n == 0 {
        return invalid("sample size must be positive");
    }
    Ok(Histogram::new(multinomial_counts(n, p.as_slice(), rng)))
}

/// Multinomial counts for weights that sum to one (up to rounding). Also
/// accepts `n = 0`.
pub(crate) fn multinomial_counts<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass = 1.0_f64;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if j == last {
            counts[j] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = binomial(remaining, cond, rng);
        counts[j] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0,1)").sample(rng)
}

/// One draw of `Σᵢ₌₁ⁿ Laplace(0, scale)`.
///
/// A Laplace variable is the difference of two independent Exponential
/// variables with the same scale, so the sum of `n` of them is the
/// difference of two independent `Gamma(n, scale)` draws.
pub fn sample_laplace_sum<R: Rng + ?Sized>(n: u64, scale: f64, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return invalid("Laplace sum needs n >= 1");
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("Laplace scale must be positive, got {scale}"));
    }
    let g = Gamma::new(n as f64, scale).expect("valid gamma parameters");
    Ok(g.sample(rng) - g.sample(rng))
}

/// One `Laplace(0, scale)` draw by inversion.
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    // u ∈ (-½, ½]
    let u: f64 = 0.5 - rng.gen::<f64>();
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;

    #[test]
    fn degenerate_category() {
        let p = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        let h = sample_histogram(5, &p, &mut RngStream::new(1, 0).rng()).unwrap();
        assert_eq!(h.counts(), &[5, 0]);
        assert!(sample_histogram(0, &p, &mut RngStream::new(1, 0).rng()).is_err());
    }

    #[test]
    fn fair_coin_concentration() {
        let p = ProbabilityVector::uniform(2).unwrap();
        let n = 100_000u64;
        let h = sample_histogram(n, &p, &mut RngStream::new(2, 0).rng()).unwrap();
        let bound = 4.0 * (n as f64 * 0.25).sqrt();
        for &c in h.counts() {
            assert!((c as f64 - 50_000.0).abs() < bound, "count {c}");
        }
        assert_eq!(h.n(), n);
    }

    #[test]
    fn multinomial_cell_means() {
        let p = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let reps = 10_000;
        let n = 100u64;
        let mut rng = RngStream::new(3, 0).rng();
        let mut sums = [0.0; 4];
        for _ in 0..reps {
            let h = sample_histogram(n, &p, &mut rng).unwrap();
            for (s, &c) in sums.iter_mut().zip(h.counts()) {
                *s += c as f64;
            }
        }
        for j in 0..4 {
            let mean = sums[j] / reps as f64;
            let se = (n as f64 * p[j] * (1.0 - p[j]) / reps as f64).sqrt();
            assert!((mean - n as f64 * p[j]).abs() < 4.0 * se, "cell {j}: {mean}");
        }
    }

    #[test]
    fn laplace_sum_moments() {
        let reps = 100_000;
        let mut rng = RngStream::new(4, 0).rng();
        let draws: Vec<f64> = (0..reps).map(|_| sample_laplace_sum(100, 2.0, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!(mean.abs() < 4.0 * (100.0 * 8.0 / reps as f64).sqrt(), "mean {mean}");
        assert!((var / 800.0 - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn laplace_sum_rejects_bad_input() {
        let mut rng = RngStream::new(4, 1).rng();
        assert!(sample_laplace_sum(0, 1.0, &mut rng).is_err());
        assert!(sample_laplace_sum(3, 0.0, &mut rng).is_err());
    }
}
