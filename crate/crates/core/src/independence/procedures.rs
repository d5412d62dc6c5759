//! Locally private independence tests.

use super::model::{estimate_marginals_bitflip, estimate_marginals_exp, estimate_marginals_noise, ProductQuadratic};
use super::optimize::minimize_product_simplex;
use super::types::{ContingencyTable, IndTestResult, MarginalPair, NoisyTable};
use crate::error::{invalid, Result};
use crate::gof::{check_alpha, Decision, GofData};
use crate::mechanisms::MechanismKind;
use crate::stats::{chi2_quantile, chi2_sf, RngStream};

/// Expected cell counts at or below this trigger the small-count guard.
pub const SMALL_COUNT_LIMIT: f64 = 5.0;

/// Data handed to an independence test.
#[derive(Debug, Clone, Copy)]
pub enum IndData<'a> {
    /// Raw counts; each record is privatized over the `rc` flattened cells.
    /// The aggregate is drawn from its exact law.
    Table(&'a ContingencyTable),
    /// Raw counts privatized record by record on per-record substreams.
    TableByRecord(&'a ContingencyTable),
    /// A table already privatized with the test's mechanism.
    Privatized(&'a NoisyTable),
}

impl IndData<'_> {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Table(t) | Self::TableByRecord(t) => (t.rows(), t.cols()),
            Self::Privatized(t) => (t.rows(), t.cols()),
        }
    }

    pub fn privatize(&self, kind: MechanismKind, stream: RngStream) -> Result<NoisyTable> {
        let (rows, cols) = self.shape();
        let nh = match self {
            Self::Table(t) => GofData::Counts(t.as_histogram()).privatize(kind, stream)?,
            Self::TableByRecord(t) => GofData::Records(&t.records()).privatize(kind, stream)?,
            Self::Privatized(t) => return Ok((*t).clone()),
        };
        NoisyTable::new(rows, cols, nh)
    }
}

/// True when some `n·π⁽¹⁾_i π⁽²⁾_j ≤ 5`.
pub fn small_count_guard(n: u64, m: &MarginalPair) -> bool {
    m.product().iter().any(|p| n as f64 * p <= SMALL_COUNT_LIMIT)
}

fn dof(rows: usize, cols: usize) -> u32 {
    ((rows - 1) * (cols - 1)) as u32
}

fn finish(
    table: &NoisyTable,
    kind: MechanismKind,
    alpha: f64,
    statistic: f64,
    plug_in: MarginalPair,
    estimate: MarginalPair,
    guard_triggered: bool,
) -> Result<IndTestResult> {
    let k = dof(table.rows(), table.cols());
    let critical_value = chi2_quantile(k, 1.0 - alpha)?;
    let decision = if guard_triggered {
        Decision::FailToReject
    } else {
        Decision::from_exceedance(statistic, critical_value)
    };
    Ok(IndTestResult {
        statistic,
        dof: k,
        critical_value,
        p_value: chi2_sf(k, statistic.max(0.0))?,
        decision,
        method: kind,
        n: table.n(),
        rows: table.rows(),
        cols: table.cols(),
        alpha,
        guard_triggered,
        plug_in,
        estimate,
    })
}

/// Minimum of `objective` started at `plug`, unless the guard fires, in
/// which case the value at `plug` is reported.
fn minimize_unless_guarded(
    objective: &ProductQuadratic,
    plug: &MarginalPair,
    guard: bool,
) -> Result<(MarginalPair, f64)> {
    if guard {
        Ok((plug.clone(), objective.value(plug)))
    } else {
        minimize_product_simplex(objective, plug)
    }
}

/// Gaussian-noise test: minimum over `θ` of the projected statistic with the
/// middle matrix at the plug-in marginals.
pub fn ind_noise_test(data: IndData<'_>, rho: f64, alpha: f64, stream: RngStream) -> Result<IndTestResult> {
    check_alpha(alpha)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return invalid(format!("rho must be positive and finite, got {rho}"));
    }
    let kind = MechanismKind::GaussianNoise { rho };
    let table = data.privatize(kind, stream)?;
    let plug = estimate_marginals_noise(&table)?;
    let guard = small_count_guard(table.n(), &plug);
    let objective = ProductQuadratic::noise(&table, &plug, rho)?;
    let (estimate, statistic) = minimize_unless_guarded(&objective, &plug, guard)?;
    finish(&table, kind, alpha, statistic, plug, estimate, guard)
}

/// Exponential-mechanism test: Pearson statistic against the pushed product
/// model at the closed-form marginals.
pub fn ind_exp_test(data: IndData<'_>, epsilon: f64, alpha: f64, stream: RngStream) -> Result<IndTestResult> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
    }
    let kind = MechanismKind::Exponential { epsilon };
    let table = data.privatize(kind, stream)?;
    let plug = estimate_marginals_exp(&table, epsilon)?;
    let guard = small_count_guard(table.n(), &plug);
    let statistic = ProductQuadratic::exponential(&table, &plug, epsilon)?.value(&plug);
    finish(&table, kind, alpha, statistic, plug.clone(), plug, guard)
}

/// Bit-flip test: minimum over `θ` of the projected statistic with the
/// bit-flip covariance at the closed-form marginals.
pub fn ind_bitflip_test(data: IndData<'_>, epsilon: f64, alpha: f64, stream: RngStream) -> Result<IndTestResult> {
    check_alpha(alpha)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return invalid(format!("epsilon must be positive and finite, got {epsilon}"));
    }
    let kind = MechanismKind::BitFlip { epsilon };
    let table = data.privatize(kind, stream)?;
    let plug = estimate_marginals_bitflip(&table, epsilon)?;
    let guard = small_count_guard(table.n(), &plug);
    let objective = ProductQuadratic::bitflip(&table, &plug, epsilon)?;
    let (estimate, statistic) = minimize_unless_guarded(&objective, &plug, guard)?;
    finish(&table, kind, alpha, statistic, plug, estimate, guard)
}

/// Runs the test matching `kind`. Laplace noise has no independence test.
pub fn ind_test(data: IndData<'_>, kind: MechanismKind, alpha: f64, stream: RngStream) -> Result<IndTestResult> {
    match kind {
        MechanismKind::GaussianNoise { rho } => ind_noise_test(data, rho, alpha, stream),
        MechanismKind::Exponential { epsilon } => ind_exp_test(data, epsilon, alpha, stream),
        MechanismKind::BitFlip { epsilon } => ind_bitflip_test(data, epsilon, alpha, stream),
        MechanismKind::LaplaceNoise { .. } => invalid("independence testing supports Gaussian noise, not Laplace"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::independence::{pushed_table_bitflip, pushed_table_exp};
    use crate::stats::NoisyHistogram;

    fn uniform_table(n_per_cell: u64) -> ContingencyTable {
        ContingencyTable::new(2, 2, vec![n_per_cell; 4]).unwrap()
    }

    #[test]
    fn guard_forces_fail_to_reject() {
        let t = ContingencyTable::new(2, 2, vec![3, 0, 0, 3]).unwrap();
        for kind in [
            MechanismKind::GaussianNoise { rho: 2.0 },
            MechanismKind::Exponential { epsilon: 2.0 },
            MechanismKind::BitFlip { epsilon: 2.0 },
        ] {
            let r = ind_test(IndData::Table(&t), kind, 0.05, RngStream::new(1, 0)).unwrap();
            assert!(r.guard_triggered);
            assert_eq!(r.decision, Decision::FailToReject);
            assert_eq!(r.dof, 1);
        }
    }

    #[test]
    fn exact_exponential_table_scores_zero() {
        let plug = MarginalPair::new(vec![0.3, 0.7], vec![0.2, 0.5, 0.3]).unwrap();
        let n = 10_000u64;
        let values = pushed_table_exp(&plug, 2.0).unwrap().as_slice().iter().map(|q| q * n as f64).collect();
        let nt = NoisyTable::new(2, 3, NoisyHistogram::new(values, n).unwrap()).unwrap();
        let r = ind_exp_test(IndData::Privatized(&nt), 2.0, 0.05, RngStream::new(0, 0)).unwrap();
        assert!(r.statistic.abs() < 1e-10);
        assert_eq!(r.dof, 2);
        assert!(!r.guard_triggered);
    }

    #[test]
    fn exact_bitflip_table_scores_zero() {
        let plug = MarginalPair::new(vec![0.4, 0.6], vec![0.5, 0.5]).unwrap();
        let n = 10_000u64;
        let values = pushed_table_bitflip(&plug, 2.0).unwrap().iter().map(|q| q * n as f64).collect();
        let nt = NoisyTable::new(2, 2, NoisyHistogram::new(values, n).unwrap()).unwrap();
        let r = ind_bitflip_test(IndData::Privatized(&nt), 2.0, 0.05, RngStream::new(0, 0)).unwrap();
        assert!(r.statistic.abs() < 1e-9);
    }

    #[test]
    fn minimum_never_exceeds_plug_in_value() {
        let t = uniform_table(2500);
        for seed in 0..20 {
            let s = RngStream::new(seed, 0);
            let r = ind_noise_test(IndData::Table(&t), 2.0, 0.05, s).unwrap();
            let nt = IndData::Table(&t).privatize(MechanismKind::GaussianNoise { rho: 2.0 }, s).unwrap();
            let at_plug = ProductQuadratic::noise(&nt, &r.plug_in, 2.0).unwrap().value(&r.plug_in);
            assert!(r.statistic >= 0.0 && r.statistic <= at_plug + 1e-12);

            let r = ind_bitflip_test(IndData::Table(&t), 2.0, 0.05, s).unwrap();
            let nt = IndData::Table(&t).privatize(MechanismKind::BitFlip { epsilon: 2.0 }, s).unwrap();
            let at_plug = ProductQuadratic::bitflip(&nt, &r.plug_in, 2.0).unwrap().value(&r.plug_in);
            assert!(r.statistic >= 0.0 && r.statistic <= at_plug + 1e-12);
        }
    }

    #[test]
    fn strong_dependence_is_rejected() {
        let t = ContingencyTable::new(2, 2, vec![4000, 1000, 1000, 4000]).unwrap();
        for kind in [
            MechanismKind::GaussianNoise { rho: 2.0 },
            MechanismKind::Exponential { epsilon: 2.0 },
            MechanismKind::BitFlip { epsilon: 2.0 },
        ] {
            let r = ind_test(IndData::Table(&t), kind, 0.05, RngStream::new(3, 0)).unwrap();
            assert!(r.decision.is_reject(), "{kind:?}: {}", r.statistic);
        }
    }

    #[test]
    fn record_path_runs() {
        let t = uniform_table(50);
        let r = ind_bitflip_test(IndData::TableByRecord(&t), 1.0, 0.05, RngStream::new(2, 0)).unwrap();
        assert_eq!(r.n, 200);
        assert!(ind_test(IndData::Table(&t), MechanismKind::LaplaceNoise { epsilon: 1.0 }, 0.05, RngStream::new(0, 0))
            .is_err());
        assert!(ind_exp_test(IndData::Table(&t), 0.0, 0.05, RngStream::new(0, 0)).is_err());
        assert!(ind_noise_test(IndData::Table(&t), 1.0, 1.0, RngStream::new(0, 0)).is_err());
    }
}
