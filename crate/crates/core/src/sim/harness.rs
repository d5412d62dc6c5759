//! Parallel, seed-deterministic Type-I and power experiments.

use rayon::prelude::*;

use super::config::{ExperimentConfig, Shape, TestKind};
use super::format::{fmt_g, CSV_HEADER};
use crate::error::{invalid, Error, Result};
use crate::gof::{
    alternating_pattern, mc_critical_value, noncentral_lambda, predicted_power, uniform_null_coefficient,
    GofNull, GofProcedure, McConfig,
};
use crate::independence::{ind_test, ContingencyTable, IndData};
use crate::mechanisms::{privatize_histogram, variance_matched_rho, MechanismKind, MechanismName};
use crate::stats::{sample_histogram, ProbabilityVector, RngStream};

/// One `(mechanism, ε, n)` cell of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub test: TestKind,
    pub mechanism: MechanismName,
    pub epsilon: f64,
    pub shape: Shape,
    pub n: u64,
    pub eta: f64,
    pub alpha: f64,
    pub trials: usize,
    pub rejections: usize,
    /// Noncentral chi-square prediction; goodness-of-fit rows only.
    pub predicted_power: Option<f64>,
}

impl PowerRow {
    pub fn power(&self) -> f64 {
        self.rejections as f64 / self.trials as f64
    }

    /// Binomial standard error `√(p̂(1−p̂)/trials)`.
    pub fn stderr(&self) -> f64 {
        let p = self.power();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    fn csv_line(&self) -> String {
        let (d, r, c) = match self.shape {
            Shape::Categories(d) => (d.to_string(), String::new(), String::new()),
            Shape::Table { rows, cols } => (String::new(), rows.to_string(), cols.to_string()),
        };
        [
            self.test.as_str().to_string(),
            self.mechanism.to_string(),
            fmt_g(self.epsilon),
            d,
            r,
            c,
            self.n.to_string(),
            fmt_g(self.eta),
            fmt_g(self.alpha),
            self.trials.to_string(),
            self.rejections.to_string(),
            fmt_g(self.power()),
            fmt_g(self.stderr()),
            self.predicted_power.map(fmt_g).unwrap_or_default(),
        ]
        .join(",")
    }
}

/// Rows in the order mechanisms × ε × n as listed in the config.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerCurve {
    pub rows: Vec<PowerRow>,
}

impl PowerCurve {
    pub fn find(&self, mechanism: MechanismName, epsilon: f64, n: u64) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.mechanism == mechanism && r.epsilon == epsilon && r.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Mechanism at privacy level ε; Gaussian noise uses `ρ = ε²/8`.
pub fn harness_mechanism(name: MechanismName, epsilon: f64) -> Result<MechanismKind> {
    match name {
        MechanismName::Gaussian => MechanismKind::from_name(name, variance_matched_rho(epsilon)),
        _ => MechanismKind::from_name(name, epsilon),
    }
}

fn mechanism_tag(name: MechanismName) -> u64 {
    match name {
        MechanismName::Gaussian => 1,
        MechanismName::Laplace => 2,
        MechanismName::Exponential => 3,
        MechanismName::BitFlip => 4,
    }
}

fn test_tag(test: TestKind) -> u64 {
    match test {
        TestKind::Gof => 1,
        TestKind::Ind => 2,
    }
}

const MC_STREAM_KEY: u64 = u64::MAX;

fn row_stream(seed: u64, test: TestKind, mechanism: MechanismName, epsilon: f64, n: u64) -> RngStream {
    RngStream::new(seed, 0).derive(&[test_tag(test), mechanism_tag(mechanism), epsilon.to_bits(), n])
}

fn with_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => job(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {w} workers: {e}")))?
            .install(job),
    }
}

/// Data distribution of a goodness-of-fit experiment: uniform plus the
/// alternating η pattern.
pub fn gof_alternative(d: usize, eta: f64) -> Result<ProbabilityVector> {
    let pattern = alternating_pattern(d);
    if eta != 0.0 && d % 2 != 0 {
        return invalid(format!("the eta pattern needs an even d, got {d}"));
    }
    ProbabilityVector::interior(pattern.iter().map(|s| 1.0 / d as f64 + eta * s).collect())
}

/// Cell law of an independence experiment: uniform product plus
/// `η·(1,−1,…)(1,−1,…)ᵀ`, flattened row-major.
pub fn ind_alternative(rows: usize, cols: usize, eta: f64) -> Result<ProbabilityVector> {
    if eta != 0.0 && (rows % 2 != 0 || cols % 2 != 0) {
        return invalid(format!("the eta pattern needs even r and c, got {rows}x{cols}"));
    }
    let (u, v) = (alternating_pattern(rows), alternating_pattern(cols));
    let base = 1.0 / (rows * cols) as f64;
    ProbabilityVector::interior(u.iter().flat_map(|a| v.iter().map(move |b| base + eta * a * b)).collect())
}

fn count_rejections(trials: usize, trial: impl Fn(u64) -> Result<bool> + Sync + Send) -> Result<usize> {
    let outcomes: Vec<bool> = (0..trials as u64).into_par_iter().map(trial).collect::<Result<_>>()?;
    Ok(outcomes.into_iter().filter(|r| *r).count())
}

fn gof_row(config: &ExperimentConfig, seed: u64, d: usize, eta: f64, name: MechanismName, eps: f64, n: u64) -> Result<PowerRow> {
    let kind = harness_mechanism(name, eps)?;
    let null = GofNull::uniform(d)?;
    let p = gof_alternative(d, eta)?;
    let procedure = GofProcedure::new(&null, kind, config.alpha)?;
    let stream = row_stream(seed, TestKind::Gof, name, eps, n);
    let mc = match kind {
        MechanismKind::LaplaceNoise { epsilon } => {
            let mut mc = McConfig::new(config.mc_samples, stream.substream(MC_STREAM_KEY));
            mc.cached_critical_value = Some(mc_critical_value(&null, n, epsilon, config.alpha, &mc)?);
            Some(mc)
        }
        _ => None,
    };
    let rejections = count_rejections(config.trials, |t| {
        let trial = stream.substream(t);
        let h = sample_histogram(n, &p, &mut trial.substream(0).rng())?;
        let nh = privatize_histogram(&h, kind, &mut trial.substream(1).rng())?;
        Ok(procedure.evaluate(&nh, mc.as_ref())?.decision.is_reject())
    })?;
    let local: Vec<f64> = alternating_pattern(d).iter().map(|s| s * eta * (n as f64).sqrt()).collect();
    let local = if eta == 0.0 { vec![0.0; d] } else { local };
    let lambda = noncentral_lambda(kind, &null, &local)?;
    Ok(PowerRow {
        test: TestKind::Gof,
        mechanism: name,
        epsilon: eps,
        shape: Shape::Categories(d),
        n,
        eta,
        alpha: config.alpha,
        trials: config.trials,
        rejections,
        predicted_power: Some(predicted_power((d - 1) as u32, lambda, config.alpha)?),
    })
}

#[allow(clippy::too_many_arguments)]
fn ind_row(
    config: &ExperimentConfig,
    seed: u64,
    rows: usize,
    cols: usize,
    eta: f64,
    name: MechanismName,
    eps: f64,
    n: u64,
) -> Result<PowerRow> {
    let kind = harness_mechanism(name, eps)?;
    let p = ind_alternative(rows, cols, eta)?;
    let stream = row_stream(seed, TestKind::Ind, name, eps, n);
    let rejections = count_rejections(config.trials, |t| {
        let trial = stream.substream(t);
        let h = sample_histogram(n, &p, &mut trial.substream(0).rng())?;
        let table = ContingencyTable::new(rows, cols, h.counts().to_vec())?;
        Ok(ind_test(IndData::Table(&table), kind, config.alpha, trial.substream(1))?.decision.is_reject())
    })?;
    Ok(PowerRow {
        test: TestKind::Ind,
        mechanism: name,
        epsilon: eps,
        shape: Shape::Table { rows, cols },
        n,
        eta,
        alpha: config.alpha,
        trials: config.trials,
        rejections,
        predicted_power: None,
    })
}

fn run(config: &ExperimentConfig, seed: u64, eta: f64) -> Result<PowerCurve> {
    config.validate()?;
    with_pool(config.workers, || {
        let mut rows = Vec::new();
        for &name in &config.mechanisms {
            for &eps in &config.epsilons {
                for &n in &config.n_grid {
                    rows.push(match config.shape {
                        Shape::Categories(d) => gof_row(config, seed, d, eta, name, eps, n)?,
                        Shape::Table { rows: r, cols: c } => ind_row(config, seed, r, c, eta, name, eps, n)?,
                    });
                }
            }
        }
        Ok(PowerCurve { rows })
    })
}

/// Rejection rates with data drawn from the null (the config's η is ignored).
pub fn run_type1(config: &ExperimentConfig, seed: u64) -> Result<PowerCurve> {
    run(config, seed, 0.0)
}

/// Goodness-of-fit power under the uniform-plus-η alternative, with the
/// noncentral chi-square prediction attached to each row.
pub fn run_power_gof(config: &ExperimentConfig, seed: u64) -> Result<PowerCurve> {
    if config.test != TestKind::Gof {
        return Err(Error::Config("run_power_gof needs test = gof".into()));
    }
    run(config, seed, config.eta)
}

/// Independence power under the uniform-product-plus-η alternative.
pub fn run_power_ind(config: &ExperimentConfig, seed: u64) -> Result<PowerCurve> {
    if config.test != TestKind::Ind {
        return Err(Error::Config("run_power_ind needs test = ind".into()));
    }
    run(config, seed, config.eta)
}

/// Power experiment for whichever test the config names.
pub fn run_power(config: &ExperimentConfig, seed: u64) -> Result<PowerCurve> {
    run(config, seed, config.eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Row {
    pub d: usize,
    pub epsilon: f64,
    pub mechanism: MechanismName,
    pub coefficient: f64,
}

pub const FIG1_MECHANISMS: [MechanismName; 3] = [MechanismName::Exponential, MechanismName::BitFlip, MechanismName::Gaussian];

/// Uniform-null noncentrality coefficients for every `(d, ε)` and each of
/// the exponential, bit-flip and variance-matched Gaussian mechanisms.
pub fn emit_fig1_table(d_list: &[usize], epsilons: &[f64]) -> Result<Vec<Fig1Row>> {
    let mut rows = Vec::with_capacity(d_list.len() * epsilons.len() * FIG1_MECHANISMS.len());
    for &d in d_list {
        for &epsilon in epsilons {
            for mechanism in FIG1_MECHANISMS {
                let coefficient = uniform_null_coefficient(mechanism, d, epsilon)?;
                rows.push(Fig1Row { d, epsilon, mechanism, coefficient });
            }
        }
    }
    Ok(rows)
}

pub fn fig1_csv(rows: &[Fig1Row]) -> String {
    let mut out = String::from("d,epsilon,mechanism,coefficient\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.d, fmt_g(r.epsilon), r.mechanism, fmt_g(r.coefficient)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gof_config(trials: usize) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "test = gof\nmechanisms = exponential,bitflip,gaussian\nd = 4\nepsilons = 2\nn_grid = 2000\n\
             eta = 0.02\ntrials = {trials}\n"
        ))
        .unwrap()
    }

    #[test]
    fn alternatives_are_valid() {
        let p = ind_alternative(2, 2, 0.01).unwrap();
        let want = [0.26, 0.24, 0.24, 0.26];
        assert!(p.as_slice().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(ind_alternative(2, 2, 0.25).is_err());
        assert!(gof_alternative(3, 0.01).is_err());
        assert_eq!(gof_alternative(3, 0.0).unwrap().as_slice(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn curve_rows_are_consistent() {
        let config = gof_config(50);
        let curve = run_power_gof(&config, 11).unwrap();
        assert_eq!(curve.rows.len(), 3);
        for r in &curve.rows {
            assert!(r.rejections <= r.trials);
            assert!((0.0..=1.0).contains(&r.power()));
            assert!(r.predicted_power.unwrap() > 0.05);
        }
        let csv = curve.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn type1_ignores_eta_and_predicts_alpha() {
        let curve = run_type1(&gof_config(20), 3).unwrap();
        for r in &curve.rows {
            assert_eq!(r.eta, 0.0);
            assert!((r.predicted_power.unwrap() - 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_seeds_identical_output_across_workers() {
        let mut config = gof_config(40);
        config.workers = Some(1);
        let a = run_power_gof(&config, 5).unwrap().to_csv();
        config.workers = Some(4);
        let b = run_power_gof(&config, 5).unwrap().to_csv();
        assert_eq!(a, b);
        let c = run_power_gof(&config, 6).unwrap().to_csv();
        assert_ne!(a, c);
    }

    #[test]
    fn ind_rows_have_no_prediction() {
        let config = ExperimentConfig::parse(
            "test = ind\nmechanisms = exponential\nr = 2\nc = 2\nepsilons = 2\nn_grid = 2000\ntrials = 10\n",
        )
        .unwrap();
        let curve = run_power_ind(&config, 1).unwrap();
        assert!(curve.rows[0].predicted_power.is_none());
        assert!(curve.to_csv().lines().nth(1).unwrap().starts_with("ind,exponential,2,,2,2,2000,0,0.05,10,"));
        assert!(run_power_gof(&config, 1).is_err());
    }

    #[test]
    fn fig1_table_shape() {
        let rows = emit_fig1_table(&[4, 10, 40, 100], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(rows.len(), 48);
        let csv = fig1_csv(&rows);
        assert_eq!(csv.lines().count(), 49);
        assert!(csv.contains("4,1,exponential,0.361"));
        assert!(emit_fig1_table(&[2], &[1.0]).is_err());
    }
}
