//! Deterministic policy evaluation.

use crate::dynamics::{Terrain, TraceRow};
use crate::env::{BipedEnv, EnvConfig, EpisodeRecord, Environment, RandomizationSpec, StepInfo};
use crate::nets::GaussianPolicy;
use crate::robots::RobotVariant;

use super::HarnessError;

/// Per-episode overrides for an evaluation run.
#[derive(Debug, Clone, Default)]
pub struct EpisodeSetup {
    /// Overrides the configured commanded speed.
    pub v_cmd: Option<f64>,
    pub randomization: Option<RandomizationSpec>,
    pub terrain: Option<Terrain>,
    pub record_trace: bool,
}

/// Outcome of one evaluation episode.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub record: EpisodeRecord,
    pub infos: Vec<StepInfo>,
    pub base_x: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

pub struct Evaluator {
    env: BipedEnv,
    base_v_cmd: Option<f64>,
}

impl Evaluator {
    pub fn new(cfg: EnvConfig, gains_from: Option<RobotVariant>) -> Result<Self, HarnessError> {
        let mut model = crate::robots::make_robot(cfg.robot);
        if let Some(src) = gains_from {
            model.pd_gains = Some(crate::robots::make_robot(src).gains());
        }
        let base_v_cmd = cfg.v_cmd;
        let env = BipedEnv::with_model(cfg, model).map_err(|e| HarnessError::Run(e.to_string()))?;
        Ok(Evaluator { env, base_v_cmd })
    }

    pub fn env(&self) -> &BipedEnv {
        &self.env
    }

    /// Runs the policy mean until the episode ends.
    pub fn run(&mut self, policy: &GaussianPolicy, seed: u64, setup: &EpisodeSetup) -> Result<Rollout, HarnessError> {
        let env = &mut self.env;
        env.seed(seed);
        env.set_v_cmd(setup.v_cmd.or(self.base_v_cmd));
        env.force_randomization(setup.randomization.clone());
        env.set_terrain(setup.terrain.clone());
        env.record_trace(setup.record_trace);
        let mut obs = env.reset();
        let mut infos = Vec::new();
        let mut base_x = Vec::new();
        loop {
            let a = policy.mean_action(&obs).map_err(|e| HarnessError::Run(e.to_string()))?;
            let step = env.try_step(&a).map_err(|e| HarnessError::Run(e.to_string()))?;
            if let Some(info) = env.last_info() {
                infos.push(info.clone());
            }
            base_x.push(env.state().base_x());
            if step.done.is_done() {
                break;
            }
            obs = step.obs;
        }
        let trace = env.trace().map(|t| t.to_vec()).unwrap_or_default();
        let record = env
            .drain_episodes()
            .pop()
            .ok_or_else(|| HarnessError::Run("episode ended without a record".into()))?;
        Ok(Rollout { record, infos, base_x, trace })
    }

    /// `episodes` runs with seeds `seed, seed + 1, …`.
    pub fn run_many(
        &mut self,
        policy: &GaussianPolicy,
        seed: u64,
        episodes: usize,
        setup: &EpisodeSetup,
    ) -> Result<Vec<EpisodeRecord>, HarnessError> {
        (0..episodes as u64).map(|k| self.run(policy, seed + k, setup).map(|r| r.record)).collect()
    }
}
