//! Reactive obstacle avoidance for serial manipulators built on chained local
//! signed-distance fields.

pub mod baselines;
pub mod error;
pub mod harness;
pub mod kinematics;
pub mod reachability;
pub mod reflex_controller;
pub mod scene;
pub mod sdf_grid;

pub use error::{Error, Result};
