//! Simulation harness: calibration and power experiments, coefficient tables.

mod config;
mod format;
mod harness;

pub use config::{ConfigMap, ExperimentConfig, Fig1Config, Shape, TestKind, DEFAULT_MC_SAMPLES, FORMAT_VERSION};
pub use format::{fmt_g, CSV_HEADER};
pub use harness::{
    emit_fig1_table, fig1_csv, gof_alternative, harness_mechanism, ind_alternative, run_power, run_power_gof,
    run_power_ind, run_type1, Fig1Row, PowerCurve, PowerRow, FIG1_MECHANISMS,
};
