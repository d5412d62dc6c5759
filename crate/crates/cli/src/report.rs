use ldp_chisq::gof::TestResult;
use ldp_chisq::independence::IndTestResult;
use ldp_chisq::mechanisms::MechanismKind;
use serde::Serialize;

use crate::error::CliResult;
use crate::io::FORMAT_VERSION;

/// JSON report of one test run.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub test: &'static str,
    pub mechanism: String,
    pub epsilon: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
    pub n: u64,
    pub d: Option<usize>,
    pub r: Option<usize>,
    pub c: Option<usize>,
    pub alpha: f64,
    pub statistic: f64,
    pub dof: u32,
    pub critical_value: f64,
    pub p_value: Option<f64>,
    pub decision: &'static str,
    pub guard_triggered: bool,
    pub mc_samples: Option<usize>,
    pub seed: u64,
}

/// `(ε, ρ, δ)` as reported: the pure-LDP ε and its implied ρ = ε²/2, or the
/// Gaussian ρ with ε at slack δ when δ > 0.
fn budget_fields(kind: MechanismKind, delta: f64) -> CliResult<(Option<f64>, Option<f64>, Option<f64>)> {
    Ok(match kind {
        MechanismKind::GaussianNoise { rho } if delta > 0.0 => {
            let b = kind.budget(delta)?;
            (Some(b.epsilon), Some(rho), Some(delta))
        }
        MechanismKind::GaussianNoise { rho } => (None, Some(rho), None),
        _ => {
            let b = kind.budget(0.0)?;
            (Some(b.epsilon), Some(b.rho), Some(0.0))
        }
    })
}

impl Report {
    pub fn gof(result: &TestResult, delta: f64, mc_samples: Option<usize>, seed: u64) -> CliResult<Self> {
        let (epsilon, rho, delta) = budget_fields(result.method, delta)?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            test: "gof",
            mechanism: result.method.name().to_string(),
            epsilon,
            rho,
            delta,
            n: result.n,
            d: Some(result.d),
            r: None,
            c: None,
            alpha: result.alpha,
            statistic: result.statistic,
            dof: result.dof,
            critical_value: result.critical_value,
            p_value: result.p_value,
            decision: result.decision.as_str(),
            guard_triggered: false,
            mc_samples,
            seed,
        })
    }

    pub fn ind(result: &IndTestResult, delta: f64, seed: u64) -> CliResult<Self> {
        let (epsilon, rho, delta) = budget_fields(result.method, delta)?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            test: "ind",
            mechanism: result.method.name().to_string(),
            epsilon,
            rho,
            delta,
            n: result.n,
            d: None,
            r: Some(result.rows),
            c: Some(result.cols),
            alpha: result.alpha,
            statistic: result.statistic,
            dof: result.dof,
            critical_value: result.critical_value,
            p_value: Some(result.p_value),
            decision: result.decision.as_str(),
            guard_triggered: result.guard_triggered,
            mc_samples: None,
            seed,
        })
    }

    pub fn is_reject(&self) -> bool {
        self.decision == "reject"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
