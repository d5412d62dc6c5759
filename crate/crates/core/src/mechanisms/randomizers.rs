//! Per-record local randomizers and their aggregation.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::budget::MechanismKind;
use crate::error::{invalid, Result};
use crate::stats::{sample_laplace, Histogram, NoisyHistogram, RngStream};

/// A single record `e_index ∈ {e_0, …, e_{d-1}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OneHotRecord {
    index: usize,
    dim: usize,
}

impl OneHotRecord {
    pub fn new(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return invalid(format!("category {index} out of range for dimension {dim}"));
        }
        Ok(Self { index, dim })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Fixed-length packed bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range");
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range");
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bv = Self::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bv.set(i, true),
                other => return invalid(format!("bit string contains '{other}'")),
            }
        }
        Ok(bv)
    }
}

impl std::fmt::Display for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportPayload {
    Vector(Vec<f64>),
    Category(OneHotRecord),
    Bits(BitVector),
}

/// One privatized record.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateReport {
    pub payload: ReportPayload,
    pub mechanism: MechanismKind,
}

impl PrivateReport {
    pub fn dim(&self) -> usize {
        match &self.payload {
            ReportPayload::Vector(v) => v.len(),
            ReportPayload::Category(r) => r.dim(),
            ReportPayload::Bits(b) => b.len(),
        }
    }
}

/// Probability that the exponential mechanism keeps the true category,
/// `e^ε / (e^ε + d − 1)`, and the probability of each other category.
pub fn exponential_law(epsilon: f64, d: usize) -> (f64, f64) {
    let t = (-epsilon).exp();
    let denom = 1.0 + (d as f64 - 1.0) * t;
    (1.0 / denom, t / denom)
}

/// Per-bit keep probability `e^{ε/2} / (e^{ε/2} + 1)` of the bit-flip randomizer.
pub fn bitflip_keep_probability(epsilon: f64) -> f64 {
    1.0 / (1.0 + (-0.5 * epsilon).exp())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    // ε = 0 is allowed here (uniform output); tests reject it separately.
    if !(epsilon >= 0.0) {
        return invalid(format!("epsilon must be nonnegative, got {epsilon}"));
    }
    Ok(())
}

/// Adds i.i.d. noise to every coordinate of the one-hot vector:
/// Normal(0, 1/ρ) for Gaussian, Laplace(2/ε) for Laplace.
pub fn randomize_noise<R: Rng + ?Sized>(record: OneHotRecord, kind: MechanismKind, rng: &mut R) -> Result<PrivateReport> {
    let mut v = vec![0.0; record.dim()];
    v[record.index()] = 1.0;
    match kind {
        MechanismKind::GaussianNoise { rho } => {
            if !(rho > 0.0) {
                return invalid(format!("rho must be positive, got {rho}"));
            }
            let sd = rho.recip().sqrt();
            for x in v.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *x += sd * z;
            }
        }
        MechanismKind::LaplaceNoise { epsilon } => {
            if !(epsilon > 0.0) {
                return invalid(format!("epsilon must be positive, got {epsilon}"));
            }
            let scale = 2.0 / epsilon;
            for x in v.iter_mut() {
                *x += sample_laplace(scale, rng);
            }
        }
        other => return invalid(format!("{} is not a noise-addition mechanism", other.name())),
    }
    Ok(PrivateReport { payload: ReportPayload::Vector(v), mechanism: kind })
}

/// Exponential mechanism over `d` categories with score `1{x = z}`.
///
/// Uses a single uniform draw against the two-level cumulative law: the
/// first `keep` of the unit interval returns the input, the rest is split
/// evenly among the other `d − 1` categories.
pub fn randomize_exponential<R: Rng + ?Sized>(record: OneHotRecord, epsilon: f64, rng: &mut R) -> Result<OneHotRecord> {
    check_epsilon(epsilon)?;
    let d = record.dim();
    if d < 2 {
        return invalid(format!("exponential mechanism needs d >= 2, got {d}"));
    }
    let (keep, _) = exponential_law(epsilon, d);
    let u: f64 = rng.gen();
    if u < keep {
        return Ok(record);
    }
    let slot = (((u - keep) / (1.0 - keep)) * (d - 1) as f64) as usize;
    let slot = slot.min(d - 2);
    let out = if slot < record.index() { slot } else { slot + 1 };
    Ok(OneHotRecord { index: out, dim: d })
}

/// Keeps each coordinate of the one-hot vector with probability
/// `e^{ε/2}/(e^{ε/2}+1)` and flips it otherwise, independently.
pub fn randomize_bitflip<R: Rng + ?Sized>(record: OneHotRecord, epsilon: f64, rng: &mut R) -> Result<PrivateReport> {
    check_epsilon(epsilon)?;
    let keep = bitflip_keep_probability(epsilon);
    let mut bits = BitVector::zeros(record.dim());
    for j in 0..record.dim() {
        let original = j == record.index();
        let kept = rng.gen::<f64>() < keep;
        bits.set(j, original == kept);
    }
    Ok(PrivateReport { payload: ReportPayload::Bits(bits), mechanism: MechanismKind::BitFlip { epsilon } })
}

/// Applies whichever randomizer `kind` names.
pub fn randomize<R: Rng + ?Sized>(record: OneHotRecord, kind: MechanismKind, rng: &mut R) -> Result<PrivateReport> {
    match kind {
        MechanismKind::GaussianNoise { .. } | MechanismKind::LaplaceNoise { .. } => randomize_noise(record, kind, rng),
        MechanismKind::Exponential { epsilon } => Ok(PrivateReport {
            payload: ReportPayload::Category(randomize_exponential(record, epsilon, rng)?),
            mechanism: kind,
        }),
        MechanismKind::BitFlip { epsilon } => randomize_bitflip(record, epsilon, rng),
    }
}

/// Privatizes every record on its own substream of `stream`, in parallel.
/// The output depends only on `stream`, not on the thread schedule.
pub fn randomize_all(records: &[OneHotRecord], kind: MechanismKind, stream: RngStream) -> Result<Vec<PrivateReport>> {
    records
        .par_iter()
        .enumerate()
        .map(|(i, r)| randomize(*r, kind, &mut stream.substream(i as u64).rng()))
        .collect()
}

/// Coordinate-wise sum of reports that share mechanism and dimension.
pub fn aggregate(reports: &[PrivateReport]) -> Result<NoisyHistogram> {
    let first = match reports.first() {
        Some(r) => r,
        None => return invalid("cannot aggregate an empty report list"),
    };
    let d = first.dim();
    let mut sums = vec![0.0; d];
    for r in reports {
        if r.mechanism != first.mechanism {
            return invalid("reports come from different mechanisms");
        }
        if r.dim() != d {
            return invalid(format!("report dimension {} differs from {d}", r.dim()));
        }
        match &r.payload {
            ReportPayload::Vector(v) => sums.iter_mut().zip(v).for_each(|(s, x)| *s += x),
            ReportPayload::Category(c) => sums[c.index()] += 1.0,
            ReportPayload::Bits(b) => {
                for (s, bit) in sums.iter_mut().zip(b.iter()) {
                    if bit {
                        *s += 1.0;
                    }
                }
            }
        }
    }
    NoisyHistogram::new(sums, reports.len() as u64)
}

/// Draws the aggregate of privatizing every record of `h` with `kind`,
/// sampled directly from its exact conditional law given `h`.
///
/// * Gaussian: `H + Normal(0, n/ρ)` per cell.
/// * Laplace: `H + Σⁿ Laplace(2/ε)` per cell (Gamma-difference sampler).
/// * Exponential: each category's `H_j` records spread as a multinomial
///   over the keep/other law.
/// * Bit flip: `Binomial(H_j, keep) + Binomial(n − H_j, 1 − keep)` per cell.
pub fn privatize_histogram<R: Rng + ?Sized>(h: &Histogram, kind: MechanismKind, rng: &mut R) -> Result<NoisyHistogram> {
    use crate::stats::{binomial, multinomial_counts, sample_laplace_sum};

    let n = h.n();
    if n == 0 {
        return invalid("cannot privatize an empty histogram");
    }
    let d = h.dim();
    let counts = h.counts();
    let values = match kind {
        MechanismKind::GaussianNoise { rho } => {
            if !(rho > 0.0) {
                return invalid(format!("rho must be positive, got {rho}"));
            }
            let sd = (n as f64 / rho).sqrt();
            counts
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(rng);
                    c as f64 + sd * z
                })
                .collect()
        }
        MechanismKind::LaplaceNoise { epsilon } => {
            if !(epsilon > 0.0) {
                return invalid(format!("epsilon must be positive, got {epsilon}"));
            }
            let scale = 2.0 / epsilon;
            let mut out = Vec::with_capacity(d);
            for &c in counts {
                out.push(c as f64 + sample_laplace_sum(n, scale, rng)?);
            }
            out
        }
        MechanismKind::Exponential { epsilon } => {
            check_epsilon(epsilon)?;
            if d < 2 {
                return invalid(format!("exponential mechanism needs d >= 2, got {d}"));
            }
            let (keep, other) = exponential_law(epsilon, d);
            let mut out = vec![0.0; d];
            let mut law = vec![other; d];
            for (j, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                law[j] = keep;
                for (o, k) in out.iter_mut().zip(multinomial_counts(c, &law, rng)) {
                    *o += k as f64;
                }
                law[j] = other;
            }
            out
        }
        MechanismKind::BitFlip { epsilon } => {
            check_epsilon(epsilon)?;
            let keep = bitflip_keep_probability(epsilon);
            counts
                .iter()
                .map(|&c| (binomial(c, keep, rng) + binomial(n - c, 1.0 - keep, rng)) as f64)
                .collect()
        }
    };
    NoisyHistogram::new(values, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, d: usize) -> OneHotRecord {
        OneHotRecord::new(i, d).unwrap()
    }

    #[test]
    fn record_validation() {
        assert!(OneHotRecord::new(3, 3).is_err());
        assert!(OneHotRecord::new(2, 3).is_ok());
    }

    #[test]
    fn exponential_law_examples() {
        let (keep, other) = exponential_law(3f64.ln(), 3);
        assert!((keep - 0.6).abs() < 1e-12);
        assert!((other - 0.2).abs() < 1e-12);
        let (keep, other) = exponential_law(0.0, 4);
        assert!((keep - 0.25).abs() < 1e-15 && (other - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exponential_frequencies_match_law() {
        let d = 3;
        let eps = 3f64.ln();
        let reps = 100_000;
        let mut rng = RngStream::new(11, 0).rng();
        let mut freq = vec![0.0; d];
        for _ in 0..reps {
            freq[randomize_exponential(rec(1, d), eps, &mut rng).unwrap().index()] += 1.0;
        }
        let law = [0.2, 0.6, 0.2];
        let tv: f64 = freq.iter().zip(law).map(|(f, p)| (f / reps as f64 - p).abs()).sum::<f64>() * 0.5;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn exponential_needs_two_categories() {
        let mut rng = RngStream::new(1, 1).rng();
        assert!(randomize_exponential(rec(0, 1), 1.0, &mut rng).is_err());
        assert!(randomize_exponential(rec(0, 2), -1.0, &mut rng).is_err());
    }

    #[test]
    fn bitflip_keep_probabilities() {
        assert!((bitflip_keep_probability(2.0 * 3f64.ln()) - 0.75).abs() < 1e-15);
        assert!((bitflip_keep_probability(0.0) - 0.5).abs() < 1e-15);

        let eps = 2.0 * 3f64.ln();
        let reps = 100_000;
        let mut rng = RngStream::new(12, 0).rng();
        let mut ones = [0.0; 4];
        for _ in 0..reps {
            let r = randomize_bitflip(rec(1, 4), eps, &mut rng).unwrap();
            let ReportPayload::Bits(b) = r.payload else { panic!("expected bits") };
            for (o, bit) in ones.iter_mut().zip(b.iter()) {
                *o += bit as u8 as f64;
            }
        }
        for (j, o) in ones.iter().enumerate() {
            let want = if j == 1 { 0.75 } else { 0.25 };
            assert!((o / reps as f64 - want).abs() < 0.01, "bit {j}");
        }
    }

    #[test]
    fn gaussian_noise_moments() {
        let reps = 100_000;
        let mut rng = RngStream::new(13, 0).rng();
        let kind = MechanismKind::GaussianNoise { rho: 1.0 };
        let mut mean = [0.0; 3];
        for _ in 0..reps {
            let ReportPayload::Vector(v) = randomize_noise(rec(0, 3), kind, &mut rng).unwrap().payload else {
                panic!()
            };
            for (m, x) in mean.iter_mut().zip(&v) {
                *m += x / reps as f64;
            }
        }
        let tol = 4.0 / (reps as f64).sqrt();
        assert!((mean[0] - 1.0).abs() < tol && mean[1].abs() < tol && mean[2].abs() < tol);
    }

    #[test]
    fn laplace_noise_variance() {
        let reps = 100_000;
        let mut rng = RngStream::new(14, 0).rng();
        let kind = MechanismKind::LaplaceNoise { epsilon: 2.0 };
        let xs: Vec<f64> = (0..reps)
            .map(|_| match randomize_noise(rec(0, 2), kind, &mut rng).unwrap().payload {
                ReportPayload::Vector(v) => v[1],
                _ => unreachable!(),
            })
            .collect();
        let m = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / reps as f64;
        assert!((var / 2.0 - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn huge_rho_returns_input() {
        let mut rng = RngStream::new(15, 0).rng();
        let r = randomize_noise(rec(2, 3), MechanismKind::GaussianNoise { rho: 1e12 }, &mut rng).unwrap();
        let ReportPayload::Vector(v) = r.payload else { panic!() };
        for (j, x) in v.iter().enumerate() {
            assert!((x - if j == 2 { 1.0 } else { 0.0 }).abs() < 1e-4);
        }
    }

    #[test]
    fn noise_rejects_non_noise_kinds() {
        let mut rng = RngStream::new(15, 1).rng();
        assert!(randomize_noise(rec(0, 2), MechanismKind::BitFlip { epsilon: 1.0 }, &mut rng).is_err());
        assert!(randomize_noise(rec(0, 2), MechanismKind::GaussianNoise { rho: 0.0 }, &mut rng).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let kind = MechanismKind::Exponential { epsilon: 1.0 };
        let reports = vec![
            PrivateReport { payload: ReportPayload::Category(rec(0, 3)), mechanism: kind },
            PrivateReport { payload: ReportPayload::Category(rec(2, 3)), mechanism: kind },
        ];
        let h = aggregate(&reports).unwrap();
        assert_eq!(h.values(), &[1.0, 0.0, 1.0]);
        assert_eq!(h.n(), 2);
        assert!(aggregate(&[]).is_err());

        let mut mixed = reports.clone();
        mixed.push(PrivateReport {
            payload: ReportPayload::Category(rec(1, 3)),
            mechanism: MechanismKind::Exponential { epsilon: 2.0 },
        });
        assert!(aggregate(&mixed).is_err());
    }

    #[test]
    fn bitvector_text_round_trip() {
        let b = BitVector::parse("0110001").unwrap();
        assert_eq!(b.to_string(), "0110001");
        assert_eq!(b.count_ones(), 3);
        assert!(BitVector::parse("01x").is_err());
    }

    #[test]
    fn randomize_all_is_deterministic() {
        let records: Vec<_> = (0..50).map(|i| rec(i % 4, 4)).collect();
        let kind = MechanismKind::BitFlip { epsilon: 1.0 };
        let a = randomize_all(&records, kind, RngStream::new(5, 9)).unwrap();
        let b = randomize_all(&records, kind, RngStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
    }
}
