//! Goodness-of-fit testing under local privacy.

mod noncentral;
mod procedures;
mod statistics;
mod types;

pub use noncentral::{noncentral_lambda, predicted_power, uniform_null_coefficient};
pub use procedures::{
    gof_bitflip, gof_exponential, gof_noise, laplace_sigma, mc_critical_value, mc_rank_index, mc_reference_sample,
    GofData, GofProcedure,
};
pub use statistics::{stat_bitflip, stat_classical, stat_glrv, stat_projected, ProjectedForm};
pub use types::{alternating_pattern, AlternativeScaling, AlternativeSpec, Decision, GofNull, McConfig, TestResult};
pub(crate) use statistics::projected_inverse;
pub(crate) use types::{ceil_tol, check_alpha};
