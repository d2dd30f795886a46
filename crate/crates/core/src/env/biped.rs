use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    advance_phase, ActionMode, Done, EnvConfig, EnvError, Environment, EpisodeRecord, Observation, RandomizationSpec,
    SensorFilter, Step, Task, Termination, OBS_DIM,
};
use crate::dynamics::{
    run_control_window, settle_on_ground, Actuator, Command, DynamicsError, PdGains, RobotModel, SimState, Simulator,
    Terrain, TraceRow, Vec2, WindowStats, N_JOINTS,
};
use crate::reward::{compute_reward, RewardBreakdown, RewardInput};
use crate::robots::{make_robot, ContactPhase, ReferenceMotion};

/// Ground profile used for new episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerrainKind {
    Flat,
    /// A 1 cm box 0.6 m ahead of the start.
    Obstacle,
    /// Random piecewise-constant heights, regenerated every episode.
    Uneven,
}

/// Length of generated uneven terrain, m.
const HEIGHTFIELD_LENGTH: f64 = 30.0;
/// Uneven terrain starts this far ahead of the start position, m.
const HEIGHTFIELD_FLAT_START: f64 = 0.3;

/// Diagnostics of the last policy step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub reward: RewardBreakdown,
    pub window: WindowStats,
    pub termination: Option<Termination>,
    pub phase: f64,
    pub label: ContactPhase,
    /// Torque command entering the reward (policy torque, or window-mean PD output).
    pub command_torque: [f64; N_JOINTS],
    /// PD target in position mode.
    pub q_target: Option<[f64; N_JOINTS]>,
}

/// Planar biped imitating a squat or walk reference.
///
/// Actions have `N_JOINTS + 1` entries in normalized units. Joint entries
/// are multiplied by the torque limits (torque mode) or by the joint ranges
/// and added to the default pose (position mode). The last entry times the
/// policy step is the phase-modulation action, clamped to `[0, Δt]`.
#[derive(Debug, Clone)]
pub struct BipedEnv {
    cfg: EnvConfig,
    nominal: RobotModel,
    gains: PdGains,
    reference: ReferenceMotion,
    sim: Simulator,
    actuator: Actuator,
    state: SimState,
    filter: SensorFilter,
    rng: ChaCha8Rng,
    spec: RandomizationSpec,
    forced_spec: Option<RandomizationSpec>,
    terrain_override: Option<Terrain>,
    phase: f64,
    v_cmd: f64,
    time: f64,
    obs: Observation,
    prev_force: [Vec2; 2],
    prev_torque: [f64; N_JOINTS],
    prev_qdot: [f64; N_JOINTS],
    info: Option<StepInfo>,
    trace: Option<Vec<TraceRow>>,
    episode: u64,
    ep_return: f64,
    ep_steps: usize,
    ep_peak_force: f64,
    finished: Vec<EpisodeRecord>,
}

impl BipedEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        let model = make_robot(cfg.robot);
        Self::with_model(cfg, model)
    }

    /// Environment for an arbitrary robot description. PD gains are the
    /// model's nominal gains divided by `s_p`.
    pub fn with_model(cfg: EnvConfig, model: RobotModel) -> Result<Self, EnvError> {
        model.validate()?;
        let gains = model.gains().scaled(cfg.s_p);
        let reference = match cfg.task {
            Task::Squat => ReferenceMotion::squat(&model),
            Task::Walk => ReferenceMotion::walk(&model),
        };
        let sim = Simulator::new(model.clone());
        let actuator = Actuator::new(&model, gains.clone(), cfg.inner_dt);
        let state = sim.state_at(0.0, 1.0, 0.0, &model.default_pose);
        let filter = SensorFilter::new(cfg.obs_noise, cfg.lpf_cutoff, cfg.policy_dt());
        let obs = Observation::new(0.0, model.default_pose, [0.0; N_JOINTS], 0.0, 0.0);
        let mut env = BipedEnv {
            cfg,
            nominal: model,
            gains,
            reference,
            sim,
            actuator,
            state,
            filter,
            rng: ChaCha8Rng::seed_from_u64(0),
            spec: RandomizationSpec::identity(),
            forced_spec: None,
            terrain_override: None,
            phase: 0.0,
            v_cmd: 0.0,
            time: 0.0,
            obs,
            prev_force: [Vec2::zeros(); 2],
            prev_torque: [0.0; N_JOINTS],
            prev_qdot: [0.0; N_JOINTS],
            info: None,
            trace: None,
            episode: 0,
            ep_return: 0.0,
            ep_steps: 0,
            ep_peak_force: 0.0,
            finished: Vec::new(),
        };
        env.reset_inner()?;
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn nominal_model(&self) -> &RobotModel {
        &self.nominal
    }

    pub fn gains(&self) -> &PdGains {
        &self.gains
    }

    pub fn reference(&self) -> &ReferenceMotion {
        &self.reference
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn v_cmd(&self) -> f64 {
        self.v_cmd
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn randomization(&self) -> &RandomizationSpec {
        &self.spec
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn last_info(&self) -> Option<&StepInfo> {
        self.info.as_ref()
    }

    /// Commanded velocity for subsequent episodes; `None` samples it.
    pub fn set_v_cmd(&mut self, v: Option<f64>) {
        self.cfg.v_cmd = v;
    }

    /// Uses `spec` for subsequent episodes instead of sampling.
    pub fn force_randomization(&mut self, spec: Option<RandomizationSpec>) {
        self.forced_spec = spec;
    }

    /// Uses `terrain` for subsequent episodes instead of the configured kind.
    pub fn set_terrain(&mut self, terrain: Option<Terrain>) {
        self.terrain_override = terrain;
    }

    /// Starts recording an inner-loop trace (cleared at every reset).
    pub fn record_trace(&mut self, on: bool) {
        self.trace = on.then(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceRow]> {
        self.trace.as_deref()
    }

    /// Physical torque command for a normalized torque action.
    pub fn torque_from_action(&self, action: &[f64]) -> [f64; N_JOINTS] {
        let lim = self.nominal.torque_limits();
        std::array::from_fn(|j| (action[j] * lim[j]).clamp(-lim[j], lim[j]))
    }

    /// Normalized action that requests the physical torque `tau`.
    pub fn action_from_torque(&self, tau: &[f64; N_JOINTS]) -> Vec<f64> {
        let lim = self.nominal.torque_limits();
        let mut a: Vec<f64> = (0..N_JOINTS).map(|j| tau[j] / lim[j]).collect();
        a.push(0.0);
        a
    }

    /// PD target for a normalized position action, clamped to the limits.
    pub fn target_from_action(&self, action: &[f64]) -> [f64; N_JOINTS] {
        let range = self.nominal.joint_ranges();
        let mut q: [f64; N_JOINTS] = std::array::from_fn(|j| self.nominal.default_pose[j] + action[j] * range[j]);
        self.nominal.clamp_to_limits(&mut q);
        q
    }

    fn reset_inner(&mut self) -> Result<Vec<f64>, DynamicsError> {
        self.spec = match (&self.forced_spec, self.cfg.randomize) {
            (Some(s), _) => s.clone(),
            (None, true) => RandomizationSpec::sample(
                &mut self.rng,
                &self.cfg.randomization,
                self.cfg.randomization_mode,
                self.cfg.randomize_leg_length,
            ),
            (None, false) => RandomizationSpec::identity(),
        };
        let model = if self.spec.is_identity() { self.nominal.clone() } else { self.spec.apply(&self.nominal) };
        self.sim.terrain = match &self.terrain_override {
            Some(t) => t.clone(),
            None => match self.cfg.terrain {
                super::TerrainKind::Flat => Terrain::Flat,
                super::TerrainKind::Obstacle => Terrain::standard_obstacle(),
                super::TerrainKind::Uneven => Terrain::random_heightfield(
                    &mut self.rng,
                    self.cfg.heightfield_amplitude,
                    self.cfg.heightfield_cell,
                    HEIGHTFIELD_LENGTH,
                    HEIGHTFIELD_FLAT_START,
                ),
            },
        };
        self.actuator = Actuator::new(&model, self.gains.clone(), self.cfg.inner_dt);
        self.sim.set_model(model);

        let n = self.cfg.init_noise;
        let mut joints: [f64; N_JOINTS] = std::array::from_fn(|j| {
            let d = if n > 0.0 { self.rng.random_range(-n..n) } else { 0.0 };
            self.nominal.default_pose[j] + d
        });
        self.nominal.clamp_to_limits(&mut joints);
        self.state = settle_on_ground(&self.sim, &joints, 0.0)?;

        self.phase = 0.0;
        self.time = 0.0;
        self.v_cmd = match self.cfg.task {
            Task::Squat => 0.0,
            Task::Walk => match self.cfg.v_cmd {
                Some(v) => v,
                None if self.cfg.v_cmd_max > 0.0 => self.rng.random_range(0.0..self.cfg.v_cmd_max),
                None => 0.0,
            },
        };
        let q_meas = self.filter.reset(&self.state.joints(), &mut self.rng);
        self.obs = Observation::new(self.state.pitch(), q_meas, [0.0; N_JOINTS], self.phase, self.v_cmd);
        self.prev_force = self.state.contact_force;
        self.prev_torque = [0.0; N_JOINTS];
        self.prev_qdot = self.state.joint_velocities();
        self.info = None;
        if let Some(t) = self.trace.as_mut() {
            t.clear();
        }
        self.ep_return = 0.0;
        self.ep_steps = 0;
        self.ep_peak_force = 0.0;
        Ok(self.obs.to_vec(&self.cfg.obs_scale))
    }

    fn finish_episode(&mut self, reason: Termination) {
        self.finished.push(EpisodeRecord {
            episode: self.episode,
            ret: self.ep_return,
            length: self.ep_steps,
            sim_time: self.time,
            termination: reason,
            peak_force: self.ep_peak_force,
            v_cmd: self.v_cmd,
            distance: self.state.base_x(),
            scales: self.spec.clone(),
        });
        self.episode += 1;
    }

    /// Applies one normalized action for one policy step.
    pub fn try_step(&mut self, action: &[f64]) -> Result<Step, EnvError> {
        let expected = N_JOINTS + 1;
        if action.len() != expected {
            return Err(EnvError::ActionDim { got: action.len(), expected });
        }
        let dt = self.cfg.policy_dt();
        let (command, q_target) = match self.cfg.mode {
            ActionMode::Torque => (Command::Torque(self.torque_from_action(action)), None),
            ActionMode::Position => {
                let q = self.target_from_action(action);
                (Command::Position(q), Some(q))
            }
        };
        let a_dphi = action[N_JOINTS] * dt;
        let x_before = self.state.base_x();
        let window = run_control_window(&self.sim, &mut self.state, &mut self.actuator, &command, dt, self.trace.as_mut());
        self.time += dt;
        self.ep_steps += 1;
        let window = match window {
            Ok(w) => w,
            Err(_) => {
                self.finish_episode(Termination::Diverged);
                self.info = None;
                return Ok(Step { obs: self.obs.to_vec(&self.cfg.obs_scale), reward: 0.0, done: Done::Terminal });
            }
        };
        self.phase = advance_phase(self.phase, dt, self.reference.period(), a_dphi);

        let q = self.state.joints();
        let qdot = self.state.joint_velocities();
        let qddot: [f64; N_JOINTS] = std::array::from_fn(|j| (qdot[j] - self.prev_qdot[j]) / dt);
        let command_torque = match command {
            Command::Torque(t) => t,
            Command::Position(_) => window.mean_command,
        };
        let pose = self.reference.pose_at(self.phase);
        let label = self.reference.contact_at(self.phase);
        let reward = compute_reward(&RewardInput {
            pitch: self.state.pitch(),
            pitch_ref: pose.base_pitch,
            q,
            q_ref: pose.q,
            contact: self.state.contact,
            label,
            v_cmd: self.v_cmd,
            v_x: (self.state.base_x() - x_before) / dt,
            qdot,
            qddot,
            force: window.mean_foot_force,
            prev_force: self.prev_force,
            torque: command_torque,
            prev_torque: self.prev_torque,
        });
        self.prev_force = window.mean_foot_force;
        self.prev_torque = command_torque;
        self.prev_qdot = qdot;

        let (q_meas, qdot_lpf) = self.filter.update(&q, &mut self.rng);
        self.obs = Observation::new(self.state.pitch(), q_meas, qdot_lpf, self.phase, self.v_cmd);

        self.ep_return += reward.total;
        self.ep_peak_force = self.ep_peak_force.max(window.peak_force());
        let termination = if self.sim.non_foot_ground_contact(&self.state) {
            Some(Termination::Fall)
        } else if self.time >= self.cfg.episode_time - 1e-9 {
            Some(Termination::TimeLimit)
        } else {
            None
        };
        let done = match termination {
            None => Done::No,
            Some(Termination::TimeLimit) => Done::Truncated,
            Some(_) => Done::Terminal,
        };
        if let Some(t) = termination {
            self.finish_episode(t);
        }
        self.info = Some(StepInfo { reward, window, termination, phase: self.phase, label, command_torque, q_target });
        Ok(Step { obs: self.obs.to_vec(&self.cfg.obs_scale), reward: reward.total, done })
    }

    /// Resets, propagating a failure to place the robot.
    pub fn try_reset(&mut self) -> Result<Vec<f64>, EnvError> {
        Ok(self.reset_inner()?)
    }
}

impl Environment for BipedEnv {
    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    fn act_dim(&self) -> usize {
        N_JOINTS + 1
    }

    fn action_std(&self) -> Vec<f64> {
        let joint = match self.cfg.mode {
            ActionMode::Torque => 1.0 / self.cfg.s_tau,
            ActionMode::Position => 1.0 / self.cfg.s_q,
        };
        let mut s = vec![joint; N_JOINTS];
        s.push(self.cfg.phase_std);
        s
    }

    fn seed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn reset(&mut self) -> Vec<f64> {
        self.try_reset().expect("default stance can always be placed on the ground")
    }

    fn step(&mut self, action: &[f64]) -> Step {
        self.try_step(action).expect("action dimension matches act_dim")
    }

    fn drain_episodes(&mut self) -> Vec<EpisodeRecord> {
        std::mem::take(&mut self.finished)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::gravity_oracle;
    use crate::robots::RobotVariant;

    fn env(mode: ActionMode, task: Task) -> BipedEnv {
        BipedEnv::new(EnvConfig { mode, task, ..EnvConfig::default() }).unwrap()
    }

    #[test]
    fn disabled_randomization_is_identity() {
        let mut e = env(ActionMode::Torque, Task::Walk);
        e.seed(1);
        e.reset();
        assert!(e.randomization().is_identity());
    }

    #[test]
    fn same_seed_same_observation() {
        let mut a = env(ActionMode::Torque, Task::Walk);
        let mut b = env(ActionMode::Torque, Task::Walk);
        a.seed(42);
        b.seed(42);
        assert_eq!(a.reset(), b.reset());
    }

    #[test]
    fn zero_position_action_targets_default_pose() {
        let mut e = env(ActionMode::Position, Task::Squat);
        e.seed(0);
        e.reset();
        e.step(&[0.0; N_JOINTS + 1]);
        assert_eq!(e.last_info().unwrap().q_target.unwrap(), e.nominal_model().default_pose);
    }

    #[test]
    fn oracle_torque_holds_pitch_for_one_window() {
        let mut e = BipedEnv::new(EnvConfig { init_noise: 0.0, ..EnvConfig::default() }).unwrap();
        e.seed(0);
        e.reset();
        let tau = gravity_oracle(e.simulator(), e.state(), e.state().contact).unwrap();
        let pitch = e.state().pitch();
        let a = e.action_from_torque(&tau);
        e.step(&a);
        assert!((e.state().pitch() - pitch).abs() < 0.01);
    }

    #[test]
    fn torso_on_ground_terminates() {
        let mut e = env(ActionMode::Torque, Task::Walk);
        e.seed(3);
        e.reset();
        let mut steps = 0;
        let mut last = Done::No;
        // Unactuated robot collapses.
        while steps < 2000 {
            last = e.step(&[0.0; N_JOINTS + 1]).done;
            steps += 1;
            if last.is_done() {
                break;
            }
        }
        assert_eq!(last, Done::Terminal);
        assert_eq!(e.last_info().unwrap().termination, Some(Termination::Fall));
        let eps = e.drain_episodes();
        assert_eq!(eps.len(), 1);
        assert_eq!(eps[0].termination, Termination::Fall);
    }

    #[test]
    fn phase_stays_in_unit_interval_and_torque_is_bounded() {
        let mut e = env(ActionMode::Torque, Task::Walk);
        e.seed(5);
        e.reset();
        let lim = e.nominal_model().torque_limits();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let a: Vec<f64> = (0..N_JOINTS + 1).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = e.step(&a);
            assert!((0.0..1.0).contains(&e.phase()));
            let info = e.last_info().unwrap();
            for j in 0..N_JOINTS {
                assert!(info.window.peak_applied[j] <= lim[j] * 1.1 + 1e-9);
            }
            if s.done.is_done() {
                e.reset();
            }
        }
    }

    #[test]
    fn episode_is_capped_at_time_limit() {
        let mut e = BipedEnv::new(EnvConfig {
            mode: ActionMode::Position,
            task: Task::Squat,
            episode_time: 0.2,
            ..EnvConfig::default()
        })
        .unwrap();
        e.seed(0);
        e.reset();
        let mut n = 0;
        loop {
            n += 1;
            if e.step(&[0.0; N_JOINTS + 1]).done == Done::Truncated {
                break;
            }
            assert!(n < 100);
        }
        assert_eq!(n, 50);
        assert!((e.time() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn unrandomized_episodes_replay_identically() {
        let run = || {
            let mut e = BipedEnv::new(EnvConfig { robot: RobotVariant::B, ..EnvConfig::default() }).unwrap();
            e.seed(11);
            e.reset();
            let mut out = Vec::new();
            for k in 0..100 {
                let a: Vec<f64> = (0..N_JOINTS + 1).map(|j| ((k * 7 + j) as f64 * 0.37).sin() * 0.05).collect();
                let s = e.step(&a);
                out.extend(s.obs);
                out.push(s.reward);
            }
            out
        };
        let a = run();
        let b = run();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn wrong_action_length_is_an_error() {
        let mut e = env(ActionMode::Torque, Task::Walk);
        assert!(matches!(e.try_step(&[0.0; 3]), Err(EnvError::ActionDim { .. })));
    }
}
