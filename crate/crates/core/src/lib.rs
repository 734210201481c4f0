//! Tracking the Lumped Error of a partially visible manipulator.

pub mod camera;
pub mod config;
pub mod control;
pub mod error;
pub mod harness;
pub mod kinematics;
pub mod presets;
pub mod replay;
pub mod se3;
pub mod simulator;
pub mod tracker;

pub use error::{Error, Result};
