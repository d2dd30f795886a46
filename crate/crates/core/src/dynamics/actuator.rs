//! Actuation between a policy command and the shaft torque: PD tracking
//! (position mode), saturation, command delay and the motor-constant scale.

use std::collections::VecDeque;

use super::model::{PdGains, RobotModel, N_JOINTS};
use super::trace::TraceRow;
use super::{DynamicsError, SimState, Simulator, Vec2};

/// `clamp(Kp·(q_target − q) − Kd·q̇, ±limit)` per joint. There is no target
/// velocity term.
pub fn pd_torque(
    q_target: &[f64; N_JOINTS],
    q: &[f64; N_JOINTS],
    qdot: &[f64; N_JOINTS],
    gains: &PdGains,
    limit: &[f64; N_JOINTS],
) -> [f64; N_JOINTS] {
    std::array::from_fn(|j| {
        let raw = gains.kp[j] * (q_target[j] - q[j]) + gains.kd[j] * (-qdot[j]);
        raw.clamp(-limit[j], limit[j])
    })
}

/// Fixed-length FIFO of torque commands. A command pushed at inner step `k`
/// comes out at step `k + steps`; the queue starts filled with zeros.
#[derive(Debug, Clone)]
pub struct DelayBuffer {
    queue: VecDeque<[f64; N_JOINTS]>,
    steps: usize,
}

impl DelayBuffer {
    pub fn new(delay: f64, dt_inner: f64) -> Self {
        let steps = (delay / dt_inner).round().max(0.0) as usize;
        let mut buf = DelayBuffer { queue: VecDeque::with_capacity(steps + 1), steps };
        buf.reset();
        buf
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn reset(&mut self) {
        self.queue.clear();
        self.queue.extend(std::iter::repeat_n([0.0; N_JOINTS], self.steps));
    }

    pub fn push(&mut self, cmd: [f64; N_JOINTS]) -> [f64; N_JOINTS] {
        if self.steps == 0 {
            return cmd;
        }
        self.queue.push_back(cmd);
        self.queue.pop_front().expect("queue holds `steps` entries")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Joint targets tracked by the inner PD loop.
    Position([f64; N_JOINTS]),
    /// Joint torques held for the whole window.
    Torque([f64; N_JOINTS]),
}

#[derive(Debug, Clone)]
pub struct Actuator {
    pub gains: PdGains,
    pub torque_limit: [f64; N_JOINTS],
    pub motor_constant: [f64; N_JOINTS],
    pub delay: DelayBuffer,
    pub dt_inner: f64,
}

impl Actuator {
    pub fn new(model: &RobotModel, gains: PdGains, dt_inner: f64) -> Self {
        Actuator {
            gains,
            torque_limit: model.torque_limits(),
            motor_constant: std::array::from_fn(|j| model.joints[j].motor_constant),
            delay: DelayBuffer::new(model.delay, dt_inner),
            dt_inner,
        }
    }

    pub fn reset(&mut self) {
        self.delay.reset();
    }

    /// Commanded torque for this inner step, before delay.
    pub fn command_torque(&self, command: &Command, state: &SimState) -> [f64; N_JOINTS] {
        match command {
            Command::Position(target) => pd_torque(
                target,
                &state.joints(),
                &state.joint_velocities(),
                &self.gains,
                &self.torque_limit,
            ),
            Command::Torque(tau) => {
                std::array::from_fn(|j| tau[j].clamp(-self.torque_limit[j], self.torque_limit[j]))
            }
        }
    }
}

/// Aggregates over one control window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub inner_steps: usize,
    /// Mean (tangential, normal) reaction per foot.
    pub mean_foot_force: [Vec2; 2],
    /// Largest reaction magnitude seen at each foot.
    pub peak_foot_force: [f64; 2],
    /// Mean commanded torque (pre-delay).
    pub mean_command: [f64; N_JOINTS],
    /// Largest |commanded torque| per joint.
    pub peak_command: [f64; N_JOINTS],
    /// Largest |shaft torque| per joint.
    pub peak_applied: [f64; N_JOINTS],
}

impl WindowStats {
    fn empty() -> Self {
        WindowStats {
            inner_steps: 0,
            mean_foot_force: [Vec2::zeros(); 2],
            peak_foot_force: [0.0; 2],
            mean_command: [0.0; N_JOINTS],
            peak_command: [0.0; N_JOINTS],
            peak_applied: [0.0; N_JOINTS],
        }
    }

    pub fn peak_force(&self) -> f64 {
        self.peak_foot_force[0].max(self.peak_foot_force[1])
    }
}

/// Holds `command` for `window` seconds, running the inner loop at
/// `actuator.dt_inner`. In position mode the PD law is re-evaluated every
/// inner step. In both modes the commanded torque passes through the delay
/// buffer and is scaled by the motor constant.
pub fn run_control_window(
    sim: &Simulator,
    state: &mut SimState,
    actuator: &mut Actuator,
    command: &Command,
    window: f64,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<WindowStats, DynamicsError> {
    let n = (window / actuator.dt_inner).round().max(1.0) as usize;
    let mut stats = WindowStats::empty();
    for _ in 0..n {
        let cmd = actuator.command_torque(command, state);
        let delayed = actuator.delay.push(cmd);
        let applied: [f64; N_JOINTS] = std::array::from_fn(|j| delayed[j] * actuator.motor_constant[j]);
        sim.step_inner(state, &applied, actuator.dt_inner)?;

        for j in 0..N_JOINTS {
            stats.mean_command[j] += cmd[j];
            stats.peak_command[j] = stats.peak_command[j].max(cmd[j].abs());
            stats.peak_applied[j] = stats.peak_applied[j].max(applied[j].abs());
        }
        for side in 0..2 {
            let f = state.contact_force[side];
            stats.mean_foot_force[side] += f;
            stats.peak_foot_force[side] = stats.peak_foot_force[side].max(f.norm());
        }
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow::capture(state, &cmd, &applied));
        }
    }
    let inv = 1.0 / n as f64;
    stats.inner_steps = n;
    for j in 0..N_JOINTS {
        stats.mean_command[j] *= inv;
    }
    for side in 0..2 {
        stats.mean_foot_force[side] *= inv;
    }
    Ok(stats)
}
