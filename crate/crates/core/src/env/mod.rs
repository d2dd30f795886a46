//! The locomotion MDP: observations, both action spaces, phase dynamics,
//! episode lifecycle and dynamics randomization.

mod biped;
mod log;
mod observation;
mod randomization;

pub use biped::{BipedEnv, StepInfo, TerrainKind};
pub use log::{episode_csv_row, write_episode_csv, EpisodeRecord, EPISODE_HEADER};
pub use observation::{advance_phase, lpf_alpha, ObsScale, Observation, SensorFilter, OBS_DIM};
pub use randomization::{RandomizationRanges, RandomizationSpec, SampleMode, CATEGORY_NAMES};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsError;
use crate::robots::RobotVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Squat,
    Walk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    Position,
    Torque,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("unknown task `{0}` (expected squat or walk)")]
    UnknownTask(String),
    #[error("unknown action mode `{0}` (expected position or torque)")]
    UnknownMode(String),
    #[error("action has {got} entries, expected {expected}")]
    ActionDim { got: usize, expected: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl FromStr for Task {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squat" => Ok(Task::Squat),
            "walk" => Ok(Task::Walk),
            _ => Err(EnvError::UnknownTask(s.to_string())),
        }
    }
}

impl FromStr for ActionMode {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "position" => Ok(ActionMode::Position),
            "torque" => Ok(ActionMode::Torque),
            _ => Err(EnvError::UnknownMode(s.to_string())),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Squat => "squat",
            Task::Walk => "walk",
        })
    }
}

impl fmt::Display for ActionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionMode::Position => "position",
            ActionMode::Torque => "torque",
        })
    }
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A link other than the feet touched the ground.
    Fall,
    /// The simulation produced a non-finite state.
    Diverged,
    /// The episode reached its time limit.
    TimeLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Fall => "fall",
            Termination::Diverged => "diverged",
            Termination::TimeLimit => "time_limit",
        }
    }

    pub fn is_failure(self) -> bool {
        !matches!(self, Termination::TimeLimit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Done {
    No,
    /// Terminal state: its value is zero.
    Terminal,
    /// Cut off by a time limit: the value of the final state is bootstrapped.
    Truncated,
}

impl Done {
    pub fn is_done(self) -> bool {
        !matches!(self, Done::No)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: Done,
}

/// Minimal episodic interface shared by the biped and the sanity tasks.
///
/// Actions are in normalized units: the learner adds Gaussian noise with
/// the per-dimension standard deviation returned by [`Environment::action_std`].
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn action_std(&self) -> Vec<f64>;
    fn seed(&mut self, seed: u64);
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Step;
    /// Episodes finished since the last call.
    fn drain_episodes(&mut self) -> Vec<EpisodeRecord> {
        Vec::new()
    }
}

/// Environment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub task: Task,
    pub robot: RobotVariant,
    pub mode: ActionMode,
    /// Policy rate, Hz.
    pub policy_freq: f64,
    /// Inner-loop step, s.
    pub inner_dt: f64,
    /// PD gain divisor: `Kp = K_default / s_p`.
    pub s_p: f64,
    /// Position-action std divisor: `Σ = q_range / s_q`.
    pub s_q: f64,
    /// Torque-action std divisor: `Σ = τ_limit / s_τ`.
    pub s_tau: f64,
    /// Std of the phase action in units of the policy step.
    pub phase_std: f64,
    pub episode_time: f64,
    pub v_cmd_max: f64,
    /// Fixed commanded velocity; sampled per episode when absent.
    pub v_cmd: Option<f64>,
    pub obs_noise: f64,
    pub lpf_cutoff: f64,
    pub obs_scale: ObsScale,
    /// Half-width of the uniform joint perturbation at reset, rad.
    pub init_noise: f64,
    pub randomize: bool,
    pub randomize_leg_length: bool,
    pub randomization_mode: SampleMode,
    pub randomization: RandomizationRanges,
    pub terrain: TerrainKind,
    pub heightfield_amplitude: f64,
    pub heightfield_cell: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            task: Task::Walk,
            robot: RobotVariant::A,
            mode: ActionMode::Torque,
            policy_freq: 250.0,
            inner_dt: crate::dynamics::DEFAULT_INNER_DT,
            s_p: 1.0,
            s_q: 200.0,
            s_tau: 10.0,
            phase_std: 0.25,
            episode_time: 16.0,
            v_cmd_max: 0.5,
            v_cmd: None,
            obs_noise: 1e-4,
            lpf_cutoff: 4.0,
            obs_scale: ObsScale::default(),
            init_noise: 0.05,
            randomize: false,
            randomize_leg_length: false,
            randomization_mode: SampleMode::PerElement,
            randomization: RandomizationRanges::default(),
            terrain: TerrainKind::Flat,
            heightfield_amplitude: 0.02,
            heightfield_cell: 0.25,
        }
    }
}

impl EnvConfig {
    pub fn policy_dt(&self) -> f64 {
        1.0 / self.policy_freq
    }
}
