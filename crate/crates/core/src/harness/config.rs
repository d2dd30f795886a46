//! Flat key/value run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::env::{ActionMode, EnvConfig, RandomizationRanges, SampleMode, Task, TerrainKind};
use crate::ppo::PpoConfig;
use crate::pretrain::{CollectConfig, RegressConfig};
use crate::robots::RobotVariant;

/// Every tunable of a run. Files are TOML with top-level keys only; any
/// key can also be overridden on the command line as `--key=value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub robot: RobotVariant,
    pub mode: ActionMode,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub freq: f64,
    pub inner_dt: f64,
    pub s_p: f64,
    pub s_q: f64,
    pub s_tau: f64,
    pub phase_std: f64,
    pub episode_time: f64,
    pub v_cmd_max: f64,
    pub v_cmd: f64,
    pub obs_noise: f64,
    pub lpf_cutoff: f64,
    pub init_noise: f64,
    pub randomize: bool,
    pub randomize_leg_length: bool,
    pub randomization_mode: SampleMode,
    pub terrain: TerrainKind,
    pub heightfield_amplitude: f64,
    pub heightfield_cell: f64,

    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub total_samples: u64,
    pub n_envs: usize,
    pub max_grad_norm: f64,
    pub value_scale: f64,
    pub checkpoint_every: u64,

    pub pretrain_samples: usize,
    pub pretrain_workers: usize,
    pub pretrain_lr: f64,
    pub pretrain_minibatch: usize,
    pub pretrain_max_steps: usize,

    pub seeds: usize,
    pub sweep_samples: u64,
    pub headline_samples: u64,
    pub robustness_episodes: usize,
    pub robustness_low: f64,
    pub robustness_high: f64,
    pub eval_episodes: usize,
    pub success_fraction: f64,
    pub parallel_jobs: usize,
    pub sweep_s_p: Vec<f64>,
    pub sweep_s_q: Vec<f64>,
    pub sweep_s_tau: Vec<f64>,
    pub velocity_s_p: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub position_s_p: f64,
    pub obstacle_v_cmd: f64,
}

/// Key descriptions printed by `--dump-config`.
pub const KEY_DOCS: &[(&str, &str)] = &[
    ("task", "reference motion: squat or walk"),
    ("robot", "robot variant: A or B"),
    ("mode", "action space: position or torque"),
    ("seed", "base random seed"),
    ("out_dir", "directory that receives timestamped run directories"),
    ("freq", "policy rate, Hz"),
    ("inner_dt", "simulation and PD step, s"),
    ("s_p", "PD gain divisor, Kp = K_default / s_p"),
    ("s_q", "position action std divisor, std = joint range / s_q"),
    ("s_tau", "torque action std divisor, std = torque limit / s_tau"),
    ("phase_std", "std of the phase action in units of the policy step"),
    ("episode_time", "episode length limit, s"),
    ("v_cmd_max", "upper bound of the per-episode commanded speed, m/s"),
    ("v_cmd", "fixed commanded speed, m/s; negative samples one per episode"),
    ("obs_noise", "joint encoder noise std, rad"),
    ("lpf_cutoff", "joint velocity low-pass cutoff, Hz"),
    ("init_noise", "half-width of the joint perturbation at reset, rad"),
    ("randomize", "sample dynamics parameters every episode"),
    ("randomize_leg_length", "include leg length in the randomization"),
    ("randomization_mode", "per_element or per_category scale draws"),
    ("terrain", "flat, obstacle or uneven"),
    ("heightfield_amplitude", "uneven terrain height half-range, m"),
    ("heightfield_cell", "uneven terrain cell length, m"),
    ("gamma", "discount factor"),
    ("lambda", "GAE parameter"),
    ("clip", "PPO ratio clip"),
    ("epochs", "passes over each batch"),
    ("minibatch", "minibatch size"),
    ("batch_size", "transitions per update"),
    ("lr_start", "initial Adam step size"),
    ("lr_end", "final Adam step size (linear decay)"),
    ("total_samples", "training budget for `train`"),
    ("n_envs", "parallel environments"),
    ("max_grad_norm", "gradient norm bound per network; 0 disables"),
    ("value_scale", "critic output multiplier; 0 uses 1/(1 - gamma)"),
    ("checkpoint_every", "updates between checkpoints; 0 keeps only the final one"),
    ("pretrain_samples", "oracle samples to collect"),
    ("pretrain_workers", "collection workers"),
    ("pretrain_lr", "regression step size"),
    ("pretrain_minibatch", "regression minibatch"),
    ("pretrain_max_steps", "regression step cap"),
    ("seeds", "seeds per experiment cell"),
    ("sweep_samples", "training budget per sweep cell"),
    ("headline_samples", "training budget for policies evaluated by experiments 4-7"),
    ("robustness_episodes", "episodes in the randomization robustness test"),
    ("robustness_low", "lower randomization scale in the robustness test"),
    ("robustness_high", "upper randomization scale in the robustness test"),
    ("eval_episodes", "episodes per evaluation"),
    ("success_fraction", "a sweep cell succeeds at this fraction of the best final reward"),
    ("parallel_jobs", "sweep cells trained at once"),
    ("sweep_s_p", "gain divisors of the gain/noise sweep"),
    ("sweep_s_q", "position std divisors of the gain/noise sweep"),
    ("sweep_s_tau", "torque std divisors of the sweeps"),
    ("velocity_s_p", "gain divisors of the velocity sweep position policies"),
    ("frequencies", "policy rates of the frequency experiment, Hz"),
    ("position_s_p", "gain divisor of the position policies used by experiments 4, 6 and 7"),
    ("obstacle_v_cmd", "commanded speed in the obstacle experiment, m/s"),
];

impl Default for RunConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        let ppo = PpoConfig::default();
        let col = CollectConfig::default();
        let reg = RegressConfig::default();
        RunConfig {
            task: env.task,
            robot: env.robot,
            mode: env.mode,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            freq: env.policy_freq,
            inner_dt: env.inner_dt,
            s_p: env.s_p,
            s_q: env.s_q,
            s_tau: env.s_tau,
            phase_std: env.phase_std,
            episode_time: env.episode_time,
            v_cmd_max: env.v_cmd_max,
            v_cmd: -1.0,
            obs_noise: env.obs_noise,
            lpf_cutoff: env.lpf_cutoff,
            init_noise: env.init_noise,
            randomize: env.randomize,
            randomize_leg_length: env.randomize_leg_length,
            randomization_mode: env.randomization_mode,
            terrain: env.terrain,
            heightfield_amplitude: env.heightfield_amplitude,
            heightfield_cell: env.heightfield_cell,
            gamma: ppo.gamma,
            lambda: ppo.lambda,
            clip: ppo.clip,
            epochs: ppo.epochs,
            minibatch: ppo.minibatch,
            batch_size: ppo.batch_size,
            lr_start: ppo.lr_start,
            lr_end: ppo.lr_end,
            total_samples: ppo.total_samples,
            n_envs: ppo.n_envs,
            max_grad_norm: ppo.max_grad_norm,
            value_scale: 0.0,
            checkpoint_every: ppo.checkpoint_every,
            pretrain_samples: col.samples,
            pretrain_workers: col.workers,
            pretrain_lr: reg.lr,
            pretrain_minibatch: reg.minibatch,
            pretrain_max_steps: reg.max_steps,
            seeds: 3,
            sweep_samples: 2_000_000,
            headline_samples: 5_000_000,
            robustness_episodes: 1000,
            robustness_low: 0.7,
            robustness_high: 1.3,
            eval_episodes: 10,
            success_fraction: 0.6,
            parallel_jobs: 1,
            sweep_s_p: vec![1.0, 2.0, 4.0, 8.0],
            sweep_s_q: vec![100.0, 200.0, 400.0, 800.0],
            sweep_s_tau: vec![5.0, 10.0, 20.0],
            velocity_s_p: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            frequencies: vec![62.5, 125.0, 250.0],
            position_s_p: 8.0,
            obstacle_v_cmd: 0.3,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| HarnessError::Usage(format!("config file {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Defaults with one comment line per key.
    pub fn dump_documented(&self) -> String {
        let mut out = String::new();
        for line in self.to_toml().lines() {
            let key = line.split('=').next().unwrap_or("").trim();
            if let Some((_, doc)) = KEY_DOCS.iter().find(|(k, _)| *k == key) {
                out.push_str(&format!("# {doc}\n"));
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    /// Sets `key` from its command-line text. The value is read as a TOML
    /// literal, falling back to a string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let key = key.replace('-', "_");
        let mut table: toml::Table = toml::from_str(&self.to_toml()).expect("config round-trips");
        if !table.contains_key(&key) {
            return Err(HarnessError::Usage(format!("unknown config key `{key}`")));
        }
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        // A bare number for a list key means a one-element list.
        let parsed = match (&table[&key], parsed) {
            (toml::Value::Array(_), v @ (toml::Value::Integer(_) | toml::Value::Float(_))) => toml::Value::Array(vec![v]),
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        table.insert(key.clone(), parsed);
        *self = toml::Value::Table(table)
            .try_into()
            .map_err(|e| HarnessError::Usage(format!("bad value `{value}` for `{key}`: {e}")))?;
        Ok(())
    }

    pub fn is_key(key: &str) -> bool {
        let key = key.replace('-', "_");
        KEY_DOCS.iter().any(|(k, _)| *k == key)
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig {
            task: self.task,
            robot: self.robot,
            mode: self.mode,
            policy_freq: self.freq,
            inner_dt: self.inner_dt,
            s_p: self.s_p,
            s_q: self.s_q,
            s_tau: self.s_tau,
            phase_std: self.phase_std,
            episode_time: self.episode_time,
            v_cmd_max: self.v_cmd_max,
            v_cmd: (self.v_cmd >= 0.0).then_some(self.v_cmd),
            obs_noise: self.obs_noise,
            lpf_cutoff: self.lpf_cutoff,
            init_noise: self.init_noise,
            randomize: self.randomize,
            randomize_leg_length: self.randomize_leg_length,
            randomization_mode: self.randomization_mode,
            randomization: RandomizationRanges::default(),
            terrain: self.terrain,
            heightfield_amplitude: self.heightfield_amplitude,
            heightfield_cell: self.heightfield_cell,
            ..EnvConfig::default()
        }
    }

    pub fn ppo(&self) -> PpoConfig {
        PpoConfig {
            gamma: self.gamma,
            lambda: self.lambda,
            clip: self.clip,
            epochs: self.epochs,
            minibatch: self.minibatch,
            batch_size: self.batch_size,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            total_samples: self.total_samples,
            n_envs: self.n_envs,
            max_grad_norm: self.max_grad_norm,
            value_scale: (self.value_scale > 0.0).then_some(self.value_scale),
            checkpoint_every: self.checkpoint_every,
            seed: self.seed,
        }
    }

    pub fn collect(&self) -> CollectConfig {
        CollectConfig { samples: self.pretrain_samples, workers: self.pretrain_workers, seed: self.seed, ..CollectConfig::default() }
    }

    pub fn regress(&self) -> RegressConfig {
        RegressConfig {
            lr: self.pretrain_lr,
            minibatch: self.pretrain_minibatch,
            max_steps: self.pretrain_max_steps,
            seed: self.seed,
            ..RegressConfig::default()
        }
    }
}
