//! Imitation-plus-regularization reward.
//!
//! Ten terms, each a scaled exponential of an error measure except the
//! contact term, which pays its full coefficient when the simulated contact
//! flags match the reference schedule and nothing otherwise.

use serde::Serialize;

use crate::dynamics::{Vec2, N_JOINTS};
use crate::robots::ContactPhase;

pub const W_BASE: f64 = 0.3;
pub const W_Q: f64 = 0.35;
pub const W_CONTACT: f64 = 0.2;
pub const W_VEL: f64 = 0.3;
pub const W_QDOT: f64 = 0.05;
pub const W_QDDOT: f64 = 0.05;
pub const W_FORCE: f64 = 0.1;
pub const W_FORCE_DELTA: f64 = 0.1;
pub const W_TORQUE: f64 = 0.05;
pub const W_TORQUE_DELTA: f64 = 0.2;

pub const K_BASE: f64 = 13.2;
pub const K_Q: f64 = 4.0;
pub const K_VEL: f64 = 3.0;
pub const K_QDOT: f64 = 0.01;
pub const K_QDDOT: f64 = 20.0;
pub const K_FORCE: f64 = 0.0005;
pub const K_FORCE_DELTA: f64 = 0.0005;
pub const K_TORQUE: f64 = 0.01;
pub const K_TORQUE_DELTA: f64 = 0.01;

/// Sum of all coefficients: the reward at the zero-error point.
pub const MAX_REWARD: f64 = W_BASE + W_Q + W_CONTACT + W_VEL + W_QDOT + W_QDDOT + W_FORCE + W_FORCE_DELTA + W_TORQUE + W_TORQUE_DELTA;

pub const TERM_NAMES: [&str; 10] = [
    "base", "q", "contact", "vel", "qdot", "qddot", "force", "force_delta", "torque", "torque_delta",
];

/// Everything the reward reads at one policy step.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardInput {
    pub pitch: f64,
    pub pitch_ref: f64,
    pub q: [f64; N_JOINTS],
    pub q_ref: [f64; N_JOINTS],
    /// Simulated (right, left) contact flags.
    pub contact: [bool; 2],
    pub label: ContactPhase,
    pub v_cmd: f64,
    /// Forward base velocity.
    pub v_x: f64,
    pub qdot: [f64; N_JOINTS],
    pub qddot: [f64; N_JOINTS],
    /// Window-averaged (tangential, normal) force per foot, right then left.
    pub force: [Vec2; 2],
    pub prev_force: [Vec2; 2],
    pub torque: [f64; N_JOINTS],
    pub prev_torque: [f64; N_JOINTS],
}

impl RewardInput {
    /// Input at which every term attains its coefficient.
    pub fn zero_error(label: ContactPhase) -> Self {
        RewardInput {
            pitch: 0.0,
            pitch_ref: 0.0,
            q: [0.0; N_JOINTS],
            q_ref: [0.0; N_JOINTS],
            contact: label.flags(),
            label,
            v_cmd: 0.0,
            v_x: 0.0,
            qdot: [0.0; N_JOINTS],
            qddot: [0.0; N_JOINTS],
            force: [Vec2::zeros(); 2],
            prev_force: [Vec2::zeros(); 2],
            torque: [0.0; N_JOINTS],
            prev_torque: [0.0; N_JOINTS],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RewardBreakdown {
    pub base: f64,
    pub q: f64,
    pub contact: f64,
    pub vel: f64,
    pub qdot: f64,
    pub qddot: f64,
    pub force: f64,
    pub force_delta: f64,
    pub torque: f64,
    pub torque_delta: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn terms(&self) -> [f64; 10] {
        [
            self.base,
            self.q,
            self.contact,
            self.vel,
            self.qdot,
            self.qddot,
            self.force,
            self.force_delta,
            self.torque,
            self.torque_delta,
        ]
    }

    pub fn add_assign(&mut self, other: &RewardBreakdown) {
        self.base += other.base;
        self.q += other.q;
        self.contact += other.contact;
        self.vel += other.vel;
        self.qdot += other.qdot;
        self.qddot += other.qddot;
        self.force += other.force;
        self.force_delta += other.force_delta;
        self.torque += other.torque;
        self.torque_delta += other.torque_delta;
        self.total += other.total;
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn compute_reward(r: &RewardInput) -> RewardBreakdown {
    let base = W_BASE * (-K_BASE * (r.pitch_ref - r.pitch).powi(2)).exp();
    let q = W_Q * (-K_Q * sq_dist(&r.q_ref, &r.q)).exp();
    let contact = if r.contact == r.label.flags() { W_CONTACT } else { 0.0 };
    let vel = W_VEL * (-K_VEL * (r.v_cmd - r.v_x).powi(2)).exp();
    let qdot = W_QDOT * (-K_QDOT * sq_norm(&r.qdot)).exp();
    let qddot = W_QDDOT * (-K_QDDOT * sq_norm(&r.qddot)).exp();
    let f_mag = r.force[0].norm() + r.force[1].norm();
    let force = W_FORCE * (-K_FORCE * f_mag).exp();
    let df_mag = (r.force[0] - r.prev_force[0]).norm() + (r.force[1] - r.prev_force[1]).norm();
    let force_delta = W_FORCE_DELTA * (-K_FORCE_DELTA * df_mag).exp();
    let torque = W_TORQUE * (-K_TORQUE * sq_norm(&r.torque).sqrt()).exp();
    let torque_delta = W_TORQUE_DELTA * (-K_TORQUE_DELTA * sq_dist(&r.torque, &r.prev_torque).sqrt()).exp();
    let total = base + q + contact + vel + qdot + qddot + force + force_delta + torque + torque_delta;
    RewardBreakdown { base, q, contact, vel, qdot, qddot, force, force_delta, torque, torque_delta, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MIRROR_JOINTS;

    #[test]
    fn zero_error_point_pays_every_coefficient() {
        let b = compute_reward(&RewardInput::zero_error(ContactPhase::Double));
        assert_eq!(
            b.terms(),
            [W_BASE, W_Q, W_CONTACT, W_VEL, W_QDOT, W_QDDOT, W_FORCE, W_FORCE_DELTA, W_TORQUE, W_TORQUE_DELTA]
        );
        assert!((b.total - 1.70).abs() < 1e-12);
    }

    #[test]
    fn contact_mismatch_drops_contact_term() {
        let mut r = RewardInput::zero_error(ContactPhase::SingleRight);
        r.contact = [true, true];
        assert!((compute_reward(&r).total - 1.50).abs() < 1e-12);
    }

    #[test]
    fn joint_error_at_half_life() {
        let mut r = RewardInput::zero_error(ContactPhase::Double);
        r.q[2] = (2f64.ln() / 4.0).sqrt();
        assert!((compute_reward(&r).q - 0.175).abs() < 1e-12);
    }

    #[test]
    fn mirror_invariance() {
        let mut r = RewardInput::zero_error(ContactPhase::SingleRight);
        r.q = [0.1, -0.4, 0.2, 0.5, -0.1, 0.0];
        r.q_ref = [0.2, -0.5, 0.3, 0.4, -0.2, 0.1];
        r.qdot = [1.0, 2.0, 0.5, -1.0, 0.3, 0.0];
        r.force = [Vec2::new(10.0, 300.0), Vec2::new(0.0, 0.0)];
        r.prev_force = [Vec2::new(5.0, 250.0), Vec2::new(1.0, 20.0)];
        r.torque = [10.0, 20.0, 5.0, -3.0, 7.0, 1.0];
        r.contact = [true, false];
        let mut m = r.clone();
        m.q = std::array::from_fn(|j| r.q[MIRROR_JOINTS[j]]);
        m.q_ref = std::array::from_fn(|j| r.q_ref[MIRROR_JOINTS[j]]);
        m.qdot = std::array::from_fn(|j| r.qdot[MIRROR_JOINTS[j]]);
        m.torque = std::array::from_fn(|j| r.torque[MIRROR_JOINTS[j]]);
        m.force = [r.force[1], r.force[0]];
        m.prev_force = [r.prev_force[1], r.prev_force[0]];
        m.contact = [false, true];
        m.label = r.label.mirrored();
        assert!((compute_reward(&r).total - compute_reward(&m).total).abs() < 1e-12);
    }

    #[test]
    fn terms_do_not_increase_with_error() {
        let mut prev = compute_reward(&RewardInput::zero_error(ContactPhase::Double));
        for k in 1..50 {
            let e = k as f64 * 0.05;
            let mut r = RewardInput::zero_error(ContactPhase::Double);
            r.pitch = e;
            r.q[0] = e;
            r.v_x = e;
            r.qdot[1] = 10.0 * e;
            r.qddot[2] = e;
            r.force[0] = Vec2::new(0.0, 100.0 * e);
            r.torque[3] = 20.0 * e;
            let b = compute_reward(&r);
            for (a, p) in b.terms().iter().zip(prev.terms()) {
                assert!(*a <= p);
            }
            assert!(b.total > 0.0 && b.total <= MAX_REWARD);
            prev = b;
        }
    }
}
