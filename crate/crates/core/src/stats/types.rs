use crate::error::{invalid, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("probability vector must be nonempty");
        }
        if let Some(bad) = entries.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return invalid(format!("probability entry {bad} is negative or non-finite"));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self(entries))
    }

    /// Like [`ProbabilityVector::new`] but also requires every entry > 0.
    pub fn interior(entries: Vec<f64>) -> Result<Self> {
        let p = Self::new(entries)?;
        p.require_interior()?;
        Ok(p)
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self(vec![1.0 / d as f64; d]))
    }

    pub fn require_interior(&self) -> Result<()> {
        if let Some((j, _)) = self.0.iter().enumerate().find(|(_, p)| **p <= 0.0) {
            return invalid(format!("probability vector has a zero entry at index {j}"));
        }
        Ok(())
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|p| *p > 0.0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Category counts over `d` categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    n: u64,
}

impl Histogram {
    pub fn new(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    /// Counts the category indices in `categories`, each of which must be `< d`.
    pub fn from_categories(categories: impl IntoIterator<Item = usize>, d: usize) -> Result<Self> {
        let mut counts = vec![0u64; d];
        for c in categories {
            if c >= d {
                return invalid(format!("category {c} out of range for dimension {d}"));
            }
            counts[c] += 1;
        }
        Ok(Self::new(counts))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn to_noisy(&self) -> NoisyHistogram {
        NoisyHistogram {
            values: self.counts.iter().map(|&c| c as f64).collect(),
            n: self.n,
        }
    }
}

/// Real-valued aggregate of `n` privatized records; entries may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyHistogram {
    values: Vec<f64>,
    n: u64,
}

impl NoisyHistogram {
    pub fn new(values: Vec<f64>, n: u64) -> Result<Self> {
        if n == 0 {
            return invalid("noisy histogram needs at least one underlying record");
        }
        if values.is_empty() {
            return invalid("noisy histogram must have at least one cell");
        }
        Ok(Self { values, n })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.0]).is_ok());
        assert!(ProbabilityVector::interior(vec![1.0, 0.0]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
    }

    #[test]
    fn histogram_from_categories() {
        let h = Histogram::from_categories([0, 2, 2, 1], 3).unwrap();
        assert_eq!(h.counts(), &[1, 1, 2]);
        assert_eq!(h.n(), 4);
        assert!(Histogram::from_categories([3], 3).is_err());
    }

    #[test]
    fn noisy_histogram_requires_records() {
        assert!(NoisyHistogram::new(vec![1.0], 0).is_err());
        assert!(NoisyHistogram::new(vec![-3.0, 2.0], 1).is_ok());
    }
}
