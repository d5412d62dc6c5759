//! Small dense symmetric matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Smallest eigenvalue accepted by [`invert_spd`], relative to the largest.
pub const SPD_CONDITION_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

/// Symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry to 1e-10 relative to the largest entry and then
    /// symmetrizes exactly.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return invalid(format!("matrix is not symmetric (max asymmetry {asym:.3e})"));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_row_slice(order: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != order * order {
            return invalid("entry count does not match matrix order");
        }
        Self::new(DMatrix::from_row_slice(order, order, entries))
    }

    pub fn identity(order: usize) -> Self {
        Self(DMatrix::identity(order, order))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.order();
        debug_assert_eq!(x.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.0[(i, j)] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.0 * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    /// `A · self · A` for symmetric `A`.
    pub fn sandwich(&self, outer: &SymMatrix) -> SymMatrix {
        let m = &outer.0 * &self.0 * &outer.0;
        SymMatrix((&m + m.transpose()) * 0.5)
    }
}

/// Inverse of a symmetric positive definite matrix.
///
/// Fails with [`Error::SingularMatrix`] when the eigenvalue ratio
/// `λ_min / λ_max` is at or below [`SPD_CONDITION_FLOOR`] (which includes
/// indefinite input).
pub fn invert_spd(m: &SymMatrix) -> Result<SymMatrix> {
    let ev = m.eigenvalues();
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    let ratio = if hi > 0.0 { lo / hi } else { f64::NEG_INFINITY };
    if !(ratio > SPD_CONDITION_FLOOR) {
        return Err(Error::SingularMatrix { ratio, floor: SPD_CONDITION_FLOOR });
    }
    let chol = m.0.clone().cholesky().ok_or(Error::SingularMatrix {
        ratio,
        floor: SPD_CONDITION_FLOOR,
    })?;
    let inv = chol.inverse();
    Ok(SymMatrix((&inv + inv.transpose()) * 0.5))
}

/// The centering projector `I − (1/d)·11ᵀ`.
pub fn centering_projector(d: usize) -> Result<SymMatrix> {
    if d < 2 {
        return invalid(format!("centering projector needs d >= 2, got {d}"));
    }
    let off = -1.0 / d as f64;
    let mut m = DMatrix::from_element(d, d, off);
    for i in 0..d {
        m[(i, i)] += 1.0;
    }
    Ok(SymMatrix(m))
}

/// Subtracts the mean from `x` (applies the centering projector).
pub fn center(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &SymMatrix, inv: &SymMatrix) -> f64 {
        let n = m.order();
        (m.as_matrix() * inv.as_matrix() - DMatrix::<f64>::identity(n, n)).norm()
    }

    #[test]
    fn inverse_examples() {
        let id = SymMatrix::identity(3);
        assert_eq!(invert_spd(&id).unwrap(), id);

        let d = SymMatrix::diagonal(&[2.0, 4.0]);
        let inv = invert_spd(&d).unwrap();
        assert!((inv.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((inv.get(1, 1) - 0.25).abs() < 1e-15);
        assert_eq!(inv.get(0, 1), 0.0);

        // Bit-flip covariance at d=2, p=(½,½), ε=2 ln 3.
        let s = SymMatrix::from_row_slice(2, &[0.25, -0.0625, -0.0625, 0.25]).unwrap();
        let inv = invert_spd(&s).unwrap();
        let det = 0.25 * 0.25 - 0.0625 * 0.0625;
        assert!((inv.get(0, 0) - 0.25 / det).abs() < 1e-12);
        assert!((inv.get(0, 1) - 0.0625 / det).abs() < 1e-12);
        assert!(residual(&s, &inv) < 1e-8);
    }

    #[test]
    fn singular_matrix_is_rejected_with_ratio() {
        let s = SymMatrix::from_row_slice(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        match invert_spd(&s) {
            Err(Error::SingularMatrix { ratio, .. }) => assert!(ratio < 1e-12),
            other => panic!("expected singular-matrix error, got {other:?}"),
        }
        let indefinite = SymMatrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(invert_spd(&indefinite), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(SymMatrix::new(m).is_err());
    }

    #[test]
    fn projector_properties() {
        let p2 = centering_projector(2).unwrap();
        assert_eq!(p2.as_matrix().as_slice(), &[0.5, -0.5, -0.5, 0.5]);

        let p5 = centering_projector(5).unwrap();
        let ones = p5.mul_vec(&[1.0; 5]);
        assert!(ones.iter().all(|v| v.abs() < 1e-15));

        let p10 = centering_projector(10).unwrap();
        let sq = p10.as_matrix() * p10.as_matrix();
        assert!((sq - p10.as_matrix()).amax() < 1e-12);

        let ev = p10.eigenvalues();
        assert!(ev[0].abs() < 1e-10);
        assert!(ev[1..].iter().all(|e| (e - 1.0).abs() < 1e-10));

        assert!(centering_projector(1).is_err());
    }
}
