//! Locally private goodness-of-fit decision procedures.

use rand::Rng;
use rayon::prelude::*;

use super::statistics::{pearson, ProjectedForm};
use super::types::{ceil_tol, check_alpha, Decision, GofNull, McConfig, TestResult};
use crate::error::{invalid, Result};
use crate::mechanisms::{aggregate, privatize_histogram, pushed_exp_distribution, randomize_all, MechanismKind, OneHotRecord};
use crate::stats::{chi2_quantile, chi2_sf, multinomial_counts, sample_laplace_sum, Histogram, NoisyHistogram, RngStream};

/// Data handed to a test.
#[derive(Debug, Clone, Copy)]
pub enum GofData<'a> {
    /// Raw records; each is privatized on its own substream.
    Records(&'a [OneHotRecord]),
    /// Raw counts; the privatized aggregate is drawn from its exact law.
    Counts(&'a Histogram),
    /// An aggregate already privatized with the test's mechanism.
    Privatized(&'a NoisyHistogram),
}

impl GofData<'_> {
    fn dim(&self) -> Option<usize> {
        match self {
            Self::Records(r) => r.first().map(|x| x.dim()),
            Self::Counts(h) => Some(h.dim()),
            Self::Privatized(h) => Some(h.dim()),
        }
    }

    /// Privatized aggregate under `kind`, using `stream` for the randomness.
    pub fn privatize(&self, kind: MechanismKind, stream: RngStream) -> Result<NoisyHistogram> {
        match *self {
            Self::Records(records) => {
                if let Some(r) = records.iter().find(|r| r.dim() != records[0].dim()) {
                    return invalid(format!("record dimension {} differs from {}", r.dim(), records[0].dim()));
                }
                aggregate(&randomize_all(records, kind, stream)?)
            }
            Self::Counts(h) => privatize_histogram(h, kind, &mut stream.rng()),
            Self::Privatized(h) => Ok(h.clone()),
        }
    }
}

/// Position (1-based, ascending) of the Monte-Carlo critical value among
/// `m` sorted reference samples: `⌈(m+1)(1−α)⌉`.
pub fn mc_rank_index(m: usize, alpha: f64) -> usize {
    ceil_tol((m as f64 + 1.0) * (1.0 - alpha)) as usize
}

/// One draw of the Laplace-branch projected statistic under `H₀`.
fn laplace_null_draw<R: Rng + ?Sized>(
    form: &ProjectedForm,
    p0: &[f64],
    n: u64,
    scale: f64,
    rng: &mut R,
) -> Result<f64> {
    let counts = multinomial_counts(n, p0, rng);
    let mut values = Vec::with_capacity(counts.len());
    for c in counts {
        values.push(c as f64 + sample_laplace_sum(n, scale, rng)?);
    }
    form.evaluate(&NoisyHistogram::new(values, n)?)
}

/// Sorted (ascending) null reference sample of the Laplace-branch statistic.
pub fn mc_reference_sample(null: &GofNull, n: u64, epsilon: f64, samples: usize, stream: RngStream) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    if n == 0 {
        return invalid("sample size must be positive");
    }
    let form = ProjectedForm::noise(null, laplace_sigma(epsilon))?;
    let p0 = null.p0().as_slice();
    let scale = 2.0 / epsilon;
    let mut draws: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| laplace_null_draw(&form, p0, n, scale, &mut stream.substream(i as u64).rng()))
        .collect::<Result<_>>()?;
    draws.sort_by(|a, b| a.total_cmp(b));
    Ok(draws)
}

/// Monte-Carlo critical value τ for the Laplace noise branch: the
/// `⌈(m+1)(1−α)⌉`-th smallest of `m` null draws (equivalently the
/// `m − ⌈(m+1)(1−α)⌉ + 1`-th largest).
pub fn mc_critical_value(null: &GofNull, n: u64, epsilon: f64, alpha: f64, mc: &McConfig) -> Result<f64> {
    mc.validate(alpha)?;
    let sample = mc_reference_sample(null, n, epsilon, mc.samples, mc.stream)?;
    Ok(sample[mc_rank_index(mc.samples, alpha) - 1])
}

/// Per-record noise variance `σ = 8/ε²` of Laplace(2/ε).
pub fn laplace_sigma(epsilon: f64) -> f64 {
    8.0 / (epsilon * epsilon)
}

/// A goodness-of-fit test with its null, mechanism and level fixed, so the
/// middle matrix and chi-square critical value are computed once.
#[derive(Debug, Clone)]
pub struct GofProcedure {
    null: GofNull,
    kind: MechanismKind,
    alpha: f64,
    statistic: GofStatistic,
    chi2_critical: f64,
}

#[derive(Debug, Clone)]
enum GofStatistic {
    Projected(ProjectedForm),
    Pearson(Vec<f64>),
}

impl GofProcedure {
    pub fn new(null: &GofNull, kind: MechanismKind, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let parameter = kind.parameter();
        if !(parameter > 0.0) || !parameter.is_finite() {
            return invalid(format!("{} parameter must be positive and finite, got {parameter}", kind.name()));
        }
        let d = null.dim();
        let statistic = match kind {
            MechanismKind::GaussianNoise { rho } => GofStatistic::Projected(ProjectedForm::noise(null, 1.0 / rho)?),
            MechanismKind::LaplaceNoise { epsilon } => {
                GofStatistic::Projected(ProjectedForm::noise(null, laplace_sigma(epsilon))?)
            }
            MechanismKind::Exponential { epsilon } => {
                GofStatistic::Pearson(pushed_exp_distribution(null.p0(), epsilon)?.into_vec())
            }
            MechanismKind::BitFlip { epsilon } => GofStatistic::Projected(ProjectedForm::bitflip(null, epsilon)?),
        };
        let chi2_critical = chi2_quantile((d - 1) as u32, 1.0 - alpha)?;
        Ok(Self { null: null.clone(), kind, alpha, statistic, chi2_critical })
    }

    pub fn null(&self) -> &GofNull {
        &self.null
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn dof(&self) -> u32 {
        (self.null.dim() - 1) as u32
    }

    pub fn chi2_critical_value(&self) -> f64 {
        self.chi2_critical
    }

    /// Test statistic on an aggregate privatized with this mechanism.
    pub fn statistic(&self, nh: &NoisyHistogram) -> Result<f64> {
        match &self.statistic {
            GofStatistic::Projected(form) => form.evaluate(nh),
            GofStatistic::Pearson(p) => pearson(nh, p),
        }
    }

    /// Decision on an already privatized aggregate. The Laplace branch needs
    /// `mc`; the others ignore it.
    pub fn evaluate(&self, nh: &NoisyHistogram, mc: Option<&McConfig>) -> Result<TestResult> {
        if nh.dim() != self.null.dim() {
            return invalid(format!("data has {} categories, null has {}", nh.dim(), self.null.dim()));
        }
        let statistic = self.statistic(nh)?;
        let dof = self.dof();
        let (critical_value, p_value, mc_exceedances) = match self.kind {
            MechanismKind::LaplaceNoise { epsilon } => {
                let mc = mc.ok_or_else(|| {
                    crate::Error::InvalidArgument("Laplace noise branch needs a Monte-Carlo configuration".into())
                })?;
                mc.validate(self.alpha)?;
                match mc.cached_critical_value {
                    Some(tau) => (tau, None, None),
                    None => {
                        let sample = mc_reference_sample(&self.null, nh.n(), epsilon, mc.samples, mc.stream)?;
                        let tau = sample[mc_rank_index(mc.samples, self.alpha) - 1];
                        let above = sample.len() - sample.partition_point(|x| *x < statistic);
                        (tau, None, Some(above))
                    }
                }
            }
            _ => (self.chi2_critical, Some(chi2_sf(dof, statistic.max(0.0))?), None),
        };
        Ok(TestResult {
            statistic,
            dof,
            critical_value,
            p_value,
            decision: Decision::from_exceedance(statistic, critical_value),
            method: self.kind,
            n: nh.n(),
            d: self.null.dim(),
            alpha: self.alpha,
            mc_exceedances,
        })
    }

    /// Privatizes `data` on `stream` (unless already privatized) and decides.
    pub fn run(&self, data: GofData<'_>, stream: RngStream, mc: Option<&McConfig>) -> Result<TestResult> {
        if matches!(self.kind, MechanismKind::LaplaceNoise { .. }) {
            match mc {
                Some(mc) => mc.validate(self.alpha)?,
                None => return invalid("Laplace noise branch needs a Monte-Carlo configuration"),
            }
        }
        match data.dim() {
            None => return invalid("no records supplied"),
            Some(d) if d != self.null.dim() => {
                return invalid(format!("data has {d} categories, null has {}", self.null.dim()))
            }
            _ => {}
        }
        let nh = data.privatize(self.kind, stream)?;
        self.evaluate(&nh, mc)
    }
}

/// Noise-addition test: Gaussian noise with σ = 1/ρ and a chi-square
/// reference, or Laplace noise with σ = 8/ε² and a Monte-Carlo reference.
pub fn gof_noise(
    data: GofData<'_>,
    null: &GofNull,
    kind: MechanismKind,
    alpha: f64,
    mc: Option<&McConfig>,
    stream: RngStream,
) -> Result<TestResult> {
    if !matches!(kind, MechanismKind::GaussianNoise { .. } | MechanismKind::LaplaceNoise { .. }) {
        return invalid(format!("{} is not a noise-addition mechanism", kind.name()));
    }
    GofProcedure::new(null, kind, alpha)?.run(data, stream, mc)
}

/// Exponential-mechanism test: Pearson statistic against the pushed null `p̌⁰`.
pub fn gof_exponential(data: GofData<'_>, null: &GofNull, epsilon: f64, alpha: f64, stream: RngStream) -> Result<TestResult> {
    GofProcedure::new(null, MechanismKind::Exponential { epsilon }, alpha)?.run(data, stream, None)
}

/// Bit-flip test: projected statistic with the bit-flip covariance.
pub fn gof_bitflip(data: GofData<'_>, null: &GofNull, epsilon: f64, alpha: f64, stream: RngStream) -> Result<TestResult> {
    GofProcedure::new(null, MechanismKind::BitFlip { epsilon }, alpha)?.run(data, stream, None)
}
