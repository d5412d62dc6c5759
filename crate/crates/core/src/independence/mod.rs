//! Independence testing for two-way tables under local privacy.

mod model;
mod optimize;
mod procedures;
mod types;

pub use model::{
    estimate_marginals_bitflip, estimate_marginals_exp, estimate_marginals_noise, product_model, pushed_table_bitflip,
    pushed_table_exp, stat_ind_noise, ProductQuadratic,
};
pub use optimize::{minimize_product_simplex, project_simplex, ProductObjective, IMPROVEMENT_TOL, MAX_ITERATIONS};
pub use procedures::{
    ind_bitflip_test, ind_exp_test, ind_noise_test, ind_test, small_count_guard, IndData, SMALL_COUNT_LIMIT,
};
pub use types::{ContingencyTable, IndTestResult, MarginalPair, NoisyTable, MARGINAL_FLOOR};
