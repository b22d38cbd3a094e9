//! Configuration, orchestration and reporting of experiments.

pub mod checkpoint;
pub mod config;
pub mod fit;
pub mod report;
pub mod runs;

pub use checkpoint::{diagnose_density, DensityCheckpoint, DensityDiagnostics};
pub use config::{parse_config, EpsilonMode, ExperimentConfig, ExperimentKind, ParsedConfig, XiChoice};
pub use fit::{
    doubling_violations, fit_double_exponential, fit_exponential_envelope, DoubleExponentialFit,
    ExponentialEnvelope,
};
pub use report::{emit_report, Artifact, Check, Report, Table};
pub use runs::{grid_initial_state, initial_xi, mode_setup, run_experiment, GridInitialState, ModeSetup};
