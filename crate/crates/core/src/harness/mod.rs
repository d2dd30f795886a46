//! Command line, run configuration and the experiment recipes that compare
//! position and torque action spaces.

mod config;
mod eval;
mod experiments;
mod pca;
mod report;
pub mod cli;
pub mod stats;
mod train;

pub use config::{RunConfig, KEY_DOCS};
pub use eval::{EpisodeSetup, Evaluator, Rollout};
pub use experiments::{
    fresh_policy, run_experiment, stand_test, sweep_velocities, train_headline_policies, GridRow, PolicySet, StandOutcome,
    EXPERIMENT_IDS,
};
pub use pca::{orient, pca, standardize, Pca, PcaError};
pub use report::{create_run_dir, ExperimentReport};
pub use train::{load_policy, make_envs, train_cell, train_cells, write_curve, Cell, CellResult};

use crate::ppo::PpoError;
use crate::pretrain::PretrainError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad command line or configuration.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Pretrain(#[from] PretrainError),
    #[error(transparent)]
    Pca(#[from] PcaError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}
