use crate::error::{invalid, Error, Result};
use crate::gof::Decision;
use crate::mechanisms::{MechanismKind, OneHotRecord};
use crate::stats::{Histogram, NoisyHistogram};

/// Floor applied to raw marginal estimates before renormalizing.
pub const MARGINAL_FLOOR: f64 = 1e-6;

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows < 2 || cols < 2 {
        return invalid(format!("contingency tables need at least 2 rows and 2 columns, got {rows}x{cols}"));
    }
    Ok(())
}

/// `r×c` table of counts, flattened row-major: cell `(i, j)` is `i·c + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Histogram,
}

impl ContingencyTable {
    pub fn new(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if counts.len() != rows * cols {
            return invalid(format!("{rows}x{cols} table needs {} counts, got {}", rows * cols, counts.len()));
        }
        Ok(Self { rows, cols, counts: Histogram::new(counts) })
    }

    /// Tallies `(row, column)` pairs.
    pub fn from_pairs(rows: usize, cols: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut counts = vec![0u64; rows * cols];
        for (i, j) in pairs {
            if i >= rows || j >= cols {
                return invalid(format!("cell ({i}, {j}) outside {rows}x{cols} table"));
            }
            counts[i * cols + j] += 1;
        }
        Ok(Self { rows, cols, counts: Histogram::new(counts) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> u64 {
        self.counts.n()
    }

    pub fn counts(&self) -> &[u64] {
        self.counts.counts()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts.counts()[i * self.cols + j]
    }

    pub fn as_histogram(&self) -> &Histogram {
        &self.counts
    }

    /// One one-hot record over the `rc` flattened cells per unit of count.
    pub fn records(&self) -> Vec<OneHotRecord> {
        let d = self.rows * self.cols;
        self.counts()
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| {
                let record = OneHotRecord::new(k, d).expect("cell index below rc");
                std::iter::repeat(record).take(c as usize)
            })
            .collect()
    }

    pub fn to_noisy(&self) -> NoisyTable {
        NoisyTable { rows: self.rows, cols: self.cols, values: self.counts.to_noisy() }
    }
}

/// Privatized `r×c` table: real-valued cells and the record count `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyTable {
    rows: usize,
    cols: usize,
    values: NoisyHistogram,
}

impl NoisyTable {
    pub fn new(rows: usize, cols: usize, values: NoisyHistogram) -> Result<Self> {
        check_shape(rows, cols)?;
        if values.dim() != rows * cols {
            return invalid(format!("{rows}x{cols} table needs {} cells, got {}", rows * cols, values.dim()));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> u64 {
        self.values.n()
    }

    pub fn values(&self) -> &[f64] {
        self.values.values()
    }

    pub fn as_histogram(&self) -> &NoisyHistogram {
        &self.values
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.values().chunks(self.cols).map(|row| row.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.values().chunks(self.cols) {
            sums.iter_mut().zip(row).for_each(|(s, x)| *s += x);
        }
        sums
    }
}

/// Row and column marginals `(π⁽¹⁾, π⁽²⁾)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPair {
    pi1: Vec<f64>,
    pi2: Vec<f64>,
}

impl MarginalPair {
    /// Both vectors must be simplex points (nonnegative, summing to 1).
    pub fn new(pi1: Vec<f64>, pi2: Vec<f64>) -> Result<Self> {
        check_shape(pi1.len(), pi2.len())?;
        for (name, v) in [("row", &pi1), ("column", &pi2)] {
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return invalid(format!("{name} marginal has a negative or non-finite entry"));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return invalid(format!("{name} marginal sums to {s}, not 1"));
            }
        }
        Ok(Self { pi1, pi2 })
    }

    /// Uniform marginals for an `r×c` table.
    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        Self::new(vec![1.0 / rows as f64; rows], vec![1.0 / cols as f64; cols])
    }

    /// Floors each raw estimate at [`MARGINAL_FLOOR`] and renormalizes.
    pub fn clamped(raw1: &[f64], raw2: &[f64]) -> Result<Self> {
        check_shape(raw1.len(), raw2.len())?;
        let clamp = |raw: &[f64]| -> Result<Vec<f64>> {
            if raw.iter().any(|x| !x.is_finite()) {
                return Err(Error::DegenerateSample("marginal estimate is not finite".into()));
            }
            let floored: Vec<f64> = raw.iter().map(|x| x.max(MARGINAL_FLOOR)).collect();
            let total: f64 = floored.iter().sum();
            Ok(floored.into_iter().map(|x| x / total).collect())
        };
        Ok(Self { pi1: clamp(raw1)?, pi2: clamp(raw2)? })
    }

    pub(crate) fn from_parts(pi1: Vec<f64>, pi2: Vec<f64>) -> Self {
        Self { pi1, pi2 }
    }

    pub fn pi1(&self) -> &[f64] {
        &self.pi1
    }

    pub fn pi2(&self) -> &[f64] {
        &self.pi2
    }

    pub fn rows(&self) -> usize {
        self.pi1.len()
    }

    pub fn cols(&self) -> usize {
        self.pi2.len()
    }

    pub fn is_interior(&self) -> bool {
        self.pi1.iter().chain(&self.pi2).all(|x| *x > 0.0)
    }

    /// Row-major flattening of `π⁽¹⁾(π⁽²⁾)ᵀ`.
    pub fn product(&self) -> Vec<f64> {
        self.pi1.iter().flat_map(|a| self.pi2.iter().map(move |b| a * b)).collect()
    }
}

/// Outcome of one independence test.
#[derive(Debug, Clone, PartialEq)]
pub struct IndTestResult {
    pub statistic: f64,
    /// Always `(r−1)(c−1)`.
    pub dof: u32,
    pub critical_value: f64,
    pub p_value: f64,
    pub decision: Decision,
    pub method: MechanismKind,
    pub n: u64,
    pub rows: usize,
    pub cols: usize,
    pub alpha: f64,
    /// Some expected cell `n·π̂⁽¹⁾_i π̂⁽²⁾_j` was at most 5; the test then
    /// fails to reject without searching.
    pub guard_triggered: bool,
    /// Plug-in marginal estimates.
    pub plug_in: MarginalPair,
    /// Marginals at which the statistic was evaluated.
    pub estimate: MarginalPair,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape_and_flattening() {
        assert!(ContingencyTable::new(1, 3, vec![1, 2, 3]).is_err());
        assert!(ContingencyTable::new(2, 2, vec![1, 2, 3]).is_err());
        let t = ContingencyTable::from_pairs(2, 3, [(0, 0), (1, 2), (1, 2), (0, 1)]).unwrap();
        assert_eq!(t.counts(), &[1, 1, 0, 0, 0, 2]);
        assert_eq!(t.get(1, 2), 2);
        assert_eq!(t.n(), 4);
        assert_eq!(t.records().len(), 4);
        assert_eq!(t.records()[3].index(), 5);
        assert!(ContingencyTable::from_pairs(2, 2, [(2, 0)]).is_err());
        let nt = t.to_noisy();
        assert_eq!(nt.row_sums(), vec![2.0, 2.0]);
        assert_eq!(nt.col_sums(), vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn clamping_gives_interior_simplex_points() {
        let m = MarginalPair::clamped(&[-0.2, 1.2], &[0.5, 0.5]).unwrap();
        assert!(m.is_interior());
        assert!((m.pi1().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((m.pi1()[0] - 1e-6 / 1.200001).abs() < 1e-15);
        assert!(MarginalPair::clamped(&[f64::NAN, 1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn marginal_validation() {
        assert!(MarginalPair::new(vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
        assert!(MarginalPair::new(vec![1.0], vec![0.5, 0.5]).is_err());
        let m = MarginalPair::new(vec![1.0, 0.0], vec![0.3, 0.7]).unwrap();
        assert!(!m.is_interior());
    }
}
