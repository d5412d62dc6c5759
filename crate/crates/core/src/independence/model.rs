//! Product models, their pushed-forward laws, plug-in marginal estimates and
//! the quadratic forms minimized by the tests.

use super::types::{MarginalPair, NoisyTable};
use crate::error::{invalid, Error, Result};
use crate::gof::projected_inverse;
use crate::mechanisms::{bitflip_alpha, bitflip_covariance_of, noisy_multinomial_covariance};
use crate::stats::{centering_projector, invert_spd, ProbabilityVector, SymMatrix};

/// Row-major flattening of `π⁽¹⁾(π⁽²⁾)ᵀ`.
pub fn product_model(m: &MarginalPair) -> Result<ProbabilityVector> {
    ProbabilityVector::new(m.product())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
    }
    Ok(())
}

/// `β_ε = 1/(e^ε + rc − 1)` and `(e^ε − 1)β_ε`, computed without overflow.
fn exp_coefficients(epsilon: f64, cells: usize) -> (f64, f64) {
    let t = (-epsilon).exp();
    let beta = t / (1.0 + (cells as f64 - 1.0) * t);
    let slope = (1.0 - t) / (1.0 + (cells as f64 - 1.0) * t);
    (beta, slope)
}

/// Law of one exponential-mechanism report over the `rc` cells when the
/// table follows `p(π)`: `β_ε((e^ε−1)p(π) + 1)`.
pub fn pushed_table_exp(m: &MarginalPair, epsilon: f64) -> Result<ProbabilityVector> {
    check_epsilon(epsilon)?;
    let (beta, slope) = exp_coefficients(epsilon, m.rows() * m.cols());
    ProbabilityVector::new(m.product().into_iter().map(|p| slope * p + beta).collect())
}

/// Per-cell mean of one bit-flip report under `p(π)`:
/// `α_ε p(π) + 1/(e^{ε/2}+1)`.
pub fn pushed_table_bitflip(m: &MarginalPair, epsilon: f64) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    let (a, b) = bitflip_affine(epsilon);
    Ok(m.product().into_iter().map(|p| a * p + b).collect())
}

fn bitflip_affine(epsilon: f64) -> (f64, f64) {
    (bitflip_alpha(epsilon), 1.0 / ((epsilon / 2.0).exp() + 1.0))
}

/// Plug-in marginals from noisy counts, normalized by the noisy total `n̂`.
pub fn estimate_marginals_noise(table: &NoisyTable) -> Result<MarginalPair> {
    let total: f64 = table.values().iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSample(format!("noisy total {total} is not positive")));
    }
    let rows: Vec<f64> = table.row_sums().iter().map(|s| s / total).collect();
    let cols: Vec<f64> = table.col_sums().iter().map(|s| s / total).collect();
    MarginalPair::clamped(&rows, &cols)
}

/// Closed-form marginals inverting the exponential-mechanism row and
/// column sums.
pub fn estimate_marginals_exp(table: &NoisyTable, epsilon: f64) -> Result<MarginalPair> {
    check_epsilon(epsilon)?;
    let (r, c) = (table.rows() as f64, table.cols() as f64);
    let (beta, slope) = exp_coefficients(epsilon, table.rows() * table.cols());
    let n = table.n() as f64;
    let rows: Vec<f64> = table.row_sums().iter().map(|s| (s / n - c * beta) / slope).collect();
    let cols: Vec<f64> = table.col_sums().iter().map(|s| (s / n - r * beta) / slope).collect();
    MarginalPair::clamped(&rows, &cols)
}

/// Closed-form marginals inverting the bit-flip row and column means.
pub fn estimate_marginals_bitflip(table: &NoisyTable, epsilon: f64) -> Result<MarginalPair> {
    check_epsilon(epsilon)?;
    let (r, c) = (table.rows() as f64, table.cols() as f64);
    let (a, b) = bitflip_affine(epsilon);
    let n = table.n() as f64;
    let rows: Vec<f64> = table.row_sums().iter().map(|s| (s / n - c * b) / a).collect();
    let cols: Vec<f64> = table.col_sums().iter().map(|s| (s / n - r * b) / a).collect();
    MarginalPair::clamped(&rows, &cols)
}

/// `f(θ) = (1/n)(y − n(a·p(θ) + b))ᵀ W (y − n(a·p(θ) + b))` for a fixed
/// symmetric weight `W` over the `rc` flattened cells.
#[derive(Debug, Clone)]
pub struct ProductQuadratic {
    y: Vec<f64>,
    n: f64,
    a: f64,
    b: f64,
    weight: SymMatrix,
    rows: usize,
    cols: usize,
}

impl ProductQuadratic {
    pub fn new(table: &NoisyTable, a: f64, b: f64, weight: SymMatrix) -> Result<Self> {
        let cells = table.rows() * table.cols();
        if weight.order() != cells {
            return invalid(format!("weight has order {}, table has {cells} cells", weight.order()));
        }
        Ok(Self {
            y: table.values().to_vec(),
            n: table.n() as f64,
            a,
            b,
            weight,
            rows: table.rows(),
            cols: table.cols(),
        })
    }

    /// Gaussian-noise form with `W = Π M̂⁻¹ Π`,
    /// `M̂ = Diag(p(π̂)) − p(π̂)p(π̂)ᵀ + (1/ρ)I`.
    pub fn noise(table: &NoisyTable, plug: &MarginalPair, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return invalid(format!("rho must be positive and finite, got {rho}"));
        }
        check_plug(table, plug)?;
        let weight = projected_inverse(&noisy_multinomial_covariance(&plug.product(), 1.0 / rho))?;
        Self::new(table, 1.0, 0.0, weight)
    }

    /// Pearson form against `p̌(θ)` with weights fixed at `Diag(1/p̌(π̌))`;
    /// at `θ = π̌` it equals the exponential-mechanism statistic.
    pub fn exponential(table: &NoisyTable, plug: &MarginalPair, epsilon: f64) -> Result<Self> {
        check_plug(table, plug)?;
        let pushed = pushed_table_exp(plug, epsilon)?;
        let (beta, slope) = exp_coefficients(epsilon, table.rows() * table.cols());
        let weight = SymMatrix::diagonal(&pushed.as_slice().iter().map(|q| 1.0 / q).collect::<Vec<_>>());
        Self::new(table, slope, beta, weight)
    }

    /// Bit-flip form with `W = Π Σ(p(π̃))⁻¹ Π`.
    pub fn bitflip(table: &NoisyTable, plug: &MarginalPair, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_plug(table, plug)?;
        let cells = table.rows() * table.cols();
        let sigma = bitflip_covariance_of(&plug.product(), epsilon);
        let weight = invert_spd(&sigma)?.sandwich(&centering_projector(cells)?);
        let (a, b) = bitflip_affine(epsilon);
        Self::new(table, a, b, weight)
    }

    pub fn weight(&self) -> &SymMatrix {
        &self.weight
    }

    fn residual(&self, m: &MarginalPair) -> Vec<f64> {
        let p = m.product();
        self.y.iter().zip(&p).map(|(y, p)| y - self.n * (self.a * p + self.b)).collect()
    }

    pub fn value(&self, m: &MarginalPair) -> f64 {
        self.weight.quadratic_form(&self.residual(m)) / self.n
    }

    /// Analytic gradient with respect to `(θ⁽¹⁾, θ⁽²⁾)`.
    pub fn gradient(&self, m: &MarginalPair) -> (Vec<f64>, Vec<f64>) {
        let wr = self.weight.mul_vec(&self.residual(m));
        let g: Vec<f64> = wr.iter().map(|x| -2.0 * self.a * x).collect();
        let (t1, t2) = (m.pi1(), m.pi2());
        let mut g1 = vec![0.0; self.rows];
        let mut g2 = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let gij = g[i * self.cols + j];
                g1[i] += gij * t2[j];
                g2[j] += gij * t1[i];
            }
        }
        (g1, g2)
    }
}

fn check_plug(table: &NoisyTable, plug: &MarginalPair) -> Result<()> {
    if plug.rows() != table.rows() || plug.cols() != table.cols() {
        return invalid(format!(
            "marginals are {}x{}, table is {}x{}",
            plug.rows(),
            plug.cols(),
            table.rows(),
            table.cols()
        ));
    }
    if !plug.is_interior() {
        return invalid("plug-in marginals must be strictly interior");
    }
    Ok(())
}

/// Gaussian-noise independence statistic at `θ` with the middle matrix
/// built from the plug-in marginals.
pub fn stat_ind_noise(table: &NoisyTable, theta: &MarginalPair, plug: &MarginalPair, rho: f64) -> Result<f64> {
    if theta.rows() != table.rows() || theta.cols() != table.cols() {
        return invalid("theta shape differs from the table");
    }
    Ok(ProductQuadratic::noise(table, plug, rho)?.value(theta))
}
