//! Gravity-compensation pre-training of the torque policy: oracle data
//! collection over randomized stances, then supervised regression of the
//! policy mean.

mod collect;
mod dataset;
mod regress;

pub use collect::{collect_pretrain_data, collect_with_model, CollectConfig};
pub use dataset::{Dataset, Support, DATASET_MAGIC};
pub use regress::{regress, EvalPoint, RegressConfig, RegressReport, StopReason};

use crate::dynamics::DynamicsError;
use crate::env::{ActionMode, EnvConfig};
use crate::nets::{standard_dims, Checkpoint, GaussianPolicy, Mlp, NetError};

#[derive(Debug, thiserror::Error)]
pub enum PretrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has (obs, target) dims {got:?}, policy expects {expected:?}")]
    Shape { expected: (usize, usize), got: (usize, usize) },
    #[error("training loss diverged at step {step}: {loss:.3e} against a minimum of {min_loss:.3e}")]
    Diverged { step: usize, loss: f64, min_loss: f64 },
    #[error("pre-training applies to torque-mode policies only")]
    PositionMode,
    #[error("bad dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Fits a fresh torque-mode policy for `env` to `data` and returns it as
/// a checkpoint ready to initialize reinforcement learning. The action std
/// is the environment's exploration std.
pub fn pretrain(env: &EnvConfig, data: &Dataset, cfg: &RegressConfig) -> Result<(Checkpoint, RegressReport), PretrainError> {
    if env.mode != ActionMode::Torque {
        return Err(PretrainError::PositionMode);
    }
    let probe = crate::env::BipedEnv::new(env.clone()).map_err(|e| PretrainError::Dataset(e.to_string()))?;
    use crate::env::Environment;
    let (od, ad) = (probe.obs_dim(), probe.act_dim());
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    let mut policy = GaussianPolicy::new(Mlp::init(&standard_dims(od, ad), 0.01, &mut rng), probe.action_std())?;
    let report = regress(&mut policy, data, cfg)?;
    Ok((Checkpoint::from_policy(&policy, 0), report))
}
