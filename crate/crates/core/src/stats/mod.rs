//! Statistical primitives shared by every test.

mod chi2;
mod linalg;
mod rng;
mod sampling;
pub mod special;
mod types;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf, noncentral_chi2_sf, normal_cdf};
pub use linalg::{center, centering_projector, invert_spd, SymMatrix, SPD_CONDITION_FLOOR};
pub use rng::RngStream;
pub use sampling::{sample_histogram, sample_laplace, sample_laplace_sum};
pub(crate) use sampling::{binomial, multinomial_counts};
pub use types::{Histogram, NoisyHistogram, ProbabilityVector};

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
