//! Local randomizers, the laws of their outputs, and privacy budgets.

mod budget;
mod pushed;
mod randomizers;

pub use budget::{
    budget_ldp_to_zcdp, budget_zcdp_to_ldp, variance_matched_rho, MechanismKind, MechanismName, PrivacyBudget,
};
pub use pushed::{
    bitflip_alpha, bitflip_covariance, bitflip_diffusion, pushed_bitflip_mean, pushed_exp_distribution,
};
pub(crate) use pushed::{bitflip_covariance_of, bitflip_mean_of, noisy_multinomial_covariance};
pub use randomizers::{
    aggregate, bitflip_keep_probability, exponential_law, privatize_histogram, randomize, randomize_all,
    randomize_bitflip, randomize_exponential, randomize_noise, BitVector, OneHotRecord, PrivateReport,
    ReportPayload,
};
