use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, PretrainError, Support};
use crate::dynamics::{
    gravity_oracle, pd_torque, settle_on_ground, DynamicsError, PdGains, RobotModel, SimState, Simulator, N_BASE,
    N_JOINTS,
};
use crate::env::{EnvConfig, Observation, OBS_DIM};

/// Settings for oracle data collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    pub samples: usize,
    pub workers: usize,
    pub seed: u64,
    /// Largest joint offset at each re-initialization, shared by both legs,
    /// rad. Each segment scales it by a uniform draw in `[0, 1]`, so poses
    /// near the nominal stance are sampled most densely.
    pub joint_offset: f64,
    /// Half-width of the additional per-joint offset, rad. Kept small so
    /// both feet usually reach the ground.
    pub asymmetry: f64,
    /// Probability of starting from a pose with one foot lifted.
    pub single_support_prob: f64,
    /// Policy steps between re-initializations, drawn uniformly.
    pub segment_steps: (usize, usize),
    /// Per-step probability of a push on the base.
    pub push_prob: f64,
    /// Largest horizontal velocity change of a push, m/s.
    pub push_velocity: f64,
    /// Largest pitch-rate change of a push, rad/s.
    pub push_pitch_rate: f64,
    /// Divisor of the nominal gains for the stabilizing PD loop that keeps
    /// the robot near its sampled pose between re-initializations.
    pub hold_gain_divisor: f64,
    /// Half-width of the random joint-velocity filler, rad/s.
    pub qdot_range: f64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            samples: 200_000,
            workers: 8,
            seed: 0,
            joint_offset: 0.2,
            asymmetry: 0.03,
            single_support_prob: 0.5,
            segment_steps: (40, 160),
            push_prob: 0.02,
            push_velocity: 0.3,
            push_pitch_rate: 0.5,
            hold_gain_divisor: 8.0,
            qdot_range: 2.0,
        }
    }
}

/// Collects `cfg.samples` rows in parallel, splitting the count evenly
/// over `cfg.workers` independently seeded workers.
pub fn collect_pretrain_data(cfg: &CollectConfig, env: &EnvConfig) -> Result<Dataset, PretrainError> {
    let model = crate::robots::make_robot(env.robot);
    collect_with_model(cfg, env, &model)
}

pub fn collect_with_model(cfg: &CollectConfig, env: &EnvConfig, model: &RobotModel) -> Result<Dataset, PretrainError> {
    let workers = cfg.workers.max(1);
    let parts: Vec<Result<Dataset, PretrainError>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let n = cfg.samples / workers + usize::from(w < cfg.samples % workers);
            let seed = cfg.seed.wrapping_mul(7919).wrapping_add(w as u64);
            Worker::new(cfg, env, model.clone(), seed).run(n)
        })
        .collect();
    let mut out = Dataset::new(OBS_DIM, N_JOINTS + 1);
    for p in parts {
        out.append(p?);
    }
    Ok(out)
}

struct Worker<'a> {
    cfg: &'a CollectConfig,
    env: &'a EnvConfig,
    sim: Simulator,
    hold: PdGains,
    limits: [f64; N_JOINTS],
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl<'a> Worker<'a> {
    fn new(cfg: &'a CollectConfig, env: &'a EnvConfig, model: RobotModel, seed: u64) -> Self {
        let hold = model.gains().scaled(cfg.hold_gain_divisor);
        let limits = model.torque_limits();
        let noise = (env.obs_noise > 0.0).then(|| Normal::new(0.0, env.obs_noise).expect("noise std"));
        Worker { cfg, env, sim: Simulator::new(model), hold, limits, rng: ChaCha8Rng::seed_from_u64(seed), noise }
    }

    fn uniform(&mut self, r: f64) -> f64 {
        if r > 0.0 {
            self.rng.random_range(-r..r)
        } else {
            0.0
        }
    }

    /// A settled stance: the default pose plus offsets, optionally with one
    /// leg folded so its foot clears the ground.
    fn initial_state(&mut self) -> Result<(SimState, [f64; N_JOINTS]), DynamicsError> {
        let model = self.sim.model().clone();
        let reach = self.cfg.joint_offset * self.rng.random_range(0.0..=1.0);
        let shared: [f64; 3] = std::array::from_fn(|_| self.uniform(reach));
        let mut q: [f64; N_JOINTS] =
            std::array::from_fn(|j| model.default_pose[j] + shared[j % 3] + self.uniform(self.cfg.asymmetry));
        if self.rng.random_bool(self.cfg.single_support_prob.clamp(0.0, 1.0)) {
            let swing = 3 * self.rng.random_range(0..2usize);
            q[swing] += self.rng.random_range(0.2..0.6);
            q[swing + 1] -= self.rng.random_range(0.5..1.0);
        }
        model.clamp_to_limits(&mut q);
        Ok((settle_on_ground(&self.sim, &q, 0.0)?, q))
    }

    fn run(mut self, n: usize) -> Result<Dataset, PretrainError> {
        let mut out = Dataset::new(OBS_DIM, N_JOINTS + 1);
        let dt = self.env.policy_dt();
        let inner = (dt / self.env.inner_dt).round().max(1.0) as usize;
        let (lo, hi) = self.cfg.segment_steps;
        let mut failures = 0usize;
        while out.len() < n {
            let (mut state, hold_q) = self.initial_state()?;
            let steps = self.rng.random_range(lo.min(hi)..=hi.max(lo));
            for _ in 0..steps {
                if out.len() >= n {
                    break;
                }
                let Some(support) = Support::from_contact(state.contact) else {
                    // Airborne: the oracle is undefined, start over.
                    break;
                };
                let tau = match gravity_oracle(&self.sim, &state, state.contact) {
                    Ok(t) => t,
                    Err(_) => break,
                };
                let obs = self.observation(&state);
                let mut target = [0.0; N_JOINTS + 1];
                for j in 0..N_JOINTS {
                    target[j] = tau[j] / self.limits[j];
                }
                target[N_JOINTS] = self.rng.random_range(0.0..1.0);
                out.push(&obs, &target, support);

                if self.rng.random_bool(self.cfg.push_prob.clamp(0.0, 1.0)) {
                    let (pv, pw) = (self.cfg.push_velocity, self.cfg.push_pitch_rate);
                    if pv > 0.0 {
                        state.v[0] += self.rng.random_range(-pv..pv);
                    }
                    if pw > 0.0 {
                        state.v[2] += self.rng.random_range(-pw..pw);
                    }
                }
                let mut ok = true;
                for _ in 0..inner {
                    let pd = pd_torque(&hold_q, &state.joints(), &state.joint_velocities(), &self.hold, &self.limits);
                    let applied: [f64; N_JOINTS] =
                        std::array::from_fn(|j| (tau[j] + pd[j]).clamp(-self.limits[j], self.limits[j]));
                    if self.sim.step_inner(&mut state, &applied, self.env.inner_dt).is_err() {
                        ok = false;
                        break;
                    }
                }
                if !ok || !state.is_finite() || self.sim.non_foot_ground_contact(&state) {
                    failures += 1;
                    break;
                }
            }
        }
        log::debug!("collection worker: {} rows, {failures} segments ended by a fall", out.len());
        Ok(out)
    }

    /// Measured pitch and joint angles; every other entry is random filler.
    fn observation(&mut self, state: &SimState) -> Vec<f64> {
        let mut q = [0.0; N_JOINTS];
        for (j, v) in q.iter_mut().enumerate() {
            let noise = self.noise.map_or(0.0, |d| d.sample(&mut self.rng));
            *v = state.q[N_BASE + j] + noise;
        }
        let r = self.cfg.qdot_range;
        let qdot: [f64; N_JOINTS] = std::array::from_fn(|_| if r > 0.0 { self.rng.random_range(-r..r) } else { 0.0 });
        let phase = self.rng.random_range(0.0..1.0);
        let v_cmd = if self.env.v_cmd_max > 0.0 { self.rng.random_range(0.0..self.env.v_cmd_max) } else { 0.0 };
        Observation::new(state.pitch(), q, qdot, phase, v_cmd).to_vec(&self.env.obs_scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize) -> CollectConfig {
        CollectConfig { samples: n, workers: 2, ..CollectConfig::default() }
    }

    #[test]
    fn targets_within_limits_and_shapes() {
        let d = collect_pretrain_data(&small(2000), &EnvConfig::default()).unwrap();
        assert_eq!(d.len(), 2000);
        assert_eq!(d.obs_dim, OBS_DIM);
        assert!(d.targets.iter().all(|t| t.abs() <= 1.0 && t.is_finite()));
        for i in 0..d.len() {
            let p = d.target_row(i)[N_JOINTS];
            assert!((0.0..1.0).contains(&p));
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = collect_pretrain_data(&small(500), &EnvConfig::default()).unwrap();
        let b = collect_pretrain_data(&small(500), &EnvConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn covers_single_and_double_support() {
        let d = collect_pretrain_data(&small(4000), &EnvConfig::default()).unwrap();
        let (single, double) = d.support_fractions();
        assert!(single >= 0.1 && double >= 0.1, "single {single} double {double}");
    }
}
