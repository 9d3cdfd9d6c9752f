//! Scenario files, seeded generators and the experiment runner behind the CLI
//! and the acceptance suite.

pub mod experiment;
pub mod generators;
pub mod histogram;
pub mod scenario;

pub use experiment::{run_experiment, ExperimentReport, ExperimentSpec};
pub use scenario::{load_model, load_scenario, Scenario, ScenarioFile};
