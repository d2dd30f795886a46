//! Proximal policy optimization with a fixed-std Gaussian policy.

mod gae;
mod pendulum;
mod rollout;
mod trainer;
mod update;

pub use gae::{compute_advantages, normalize};
pub use pendulum::Pendulum;
pub use rollout::{EpisodeStat, RolloutBatch, VecEnv};
pub use trainer::{write_curve_csv, CurveRow, TrainSummary, Trainer, CURVE_HEADER};
pub use update::{update, UpdateStats};

use serde::{Deserialize, Serialize};

use crate::nets::NetError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    /// Transitions collected before each update.
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Sample budget; the learning rate decays linearly over it.
    pub total_samples: u64,
    pub n_envs: usize,
    /// Global gradient-norm bound per network; non-positive disables clipping.
    pub max_grad_norm: f64,
    /// Value network output multiplier; `1/(1−γ)` when absent.
    pub value_scale: Option<f64>,
    /// Write a checkpoint every this many updates (0: only the final one).
    pub checkpoint_every: u64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            epochs: 4,
            minibatch: 128,
            batch_size: 16384,
            lr_start: 5e-5,
            lr_end: 1e-6,
            total_samples: 5_000_000,
            n_envs: 8,
            max_grad_norm: 0.5,
            value_scale: None,
            checkpoint_every: 10,
            seed: 0,
        }
    }
}

impl PpoConfig {
    /// Linearly interpolated learning rate after `samples` of the budget.
    pub fn lr_at(&self, samples: u64) -> f64 {
        let frac = if self.total_samples == 0 { 1.0 } else { (samples as f64 / self.total_samples as f64).min(1.0) };
        self.lr_start * (1.0 - frac) + self.lr_end * frac
    }

    pub fn value_scale(&self) -> f64 {
        self.value_scale.unwrap_or(1.0 / (1.0 - self.gamma))
    }
}

/// Settings for the pendulum sanity task: smaller batches and a larger
/// step size than the biped defaults, over a 500k-sample budget.
pub fn pendulum_config() -> PpoConfig {
    PpoConfig {
        batch_size: 4096,
        minibatch: 256,
        epochs: 8,
        lr_start: 3e-4,
        lr_end: 1e-5,
        total_samples: 500_000,
        n_envs: 8,
        ..PpoConfig::default()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PpoError {
    #[error("non-finite loss during update {update}; parameters restored")]
    NonFinite { update: u64 },
    #[error("policy expects {expected} observation dims, environment provides {got}")]
    Shape { expected: usize, got: usize },
    #[error("need at least one environment")]
    NoEnvironments,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_schedule_midpoint() {
        let c = PpoConfig { total_samples: 1000, ..PpoConfig::default() };
        assert!((c.lr_at(500) - 2.55e-5).abs() < 1e-18);
        assert_eq!(c.lr_at(0), 5e-5);
        assert_eq!(c.lr_at(5000), 1e-6);
    }
}
