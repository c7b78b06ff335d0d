//! Release process as code for automated-vehicle prototypes.
//!
//! Hazard analysis and risk classification, a file-backed record store,
//! an event-sourced release workflow with role gating and gradual stage
//! release, readiness validation and release-document compilation.

pub mod actions;
pub mod cli;
pub mod compiler;
pub mod fixture;
pub mod model;
pub mod repository;
pub mod risk;
pub mod service;
pub mod store;
pub mod validation;
pub mod views;
pub mod workflow;

pub use model::*;
pub use repository::{RepoConfig, Repository, SCHEMA_VERSION};
