//! Torque-limited inverted pendulum used as a quick learning sanity check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Done, Environment, Step};

/// A point mass on a massless rod, actuated at the pivot; angle zero is
/// upright. Reward is `exp(−θ²)` per step, so the per-step maximum is 1.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
    pub torque_limit: f64,
    pub dt: f64,
    pub horizon: usize,
    pub init_range: f64,
    pub action_std: f64,
    theta: f64,
    omega: f64,
    t: usize,
    rng: ChaCha8Rng,
}

impl Default for Pendulum {
    fn default() -> Self {
        Pendulum {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.1,
            torque_limit: 6.0,
            dt: 0.02,
            horizon: 200,
            init_range: 0.4,
            action_std: 0.2,
            theta: 0.0,
            omega: 0.0,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }
}

impl Pendulum {
    pub fn angle(&self) -> f64 {
        self.theta
    }

    fn obs(&self) -> Vec<f64> {
        vec![self.theta.sin(), self.theta.cos(), 0.25 * self.omega]
    }
}

impl Environment for Pendulum {
    fn obs_dim(&self) -> usize {
        3
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn action_std(&self) -> Vec<f64> {
        vec![self.action_std]
    }

    fn seed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn reset(&mut self) -> Vec<f64> {
        self.theta = self.rng.random_range(-self.init_range..=self.init_range);
        self.omega = 0.0;
        self.t = 0;
        self.obs()
    }

    fn step(&mut self, action: &[f64]) -> Step {
        let tau = (action[0] * self.torque_limit).clamp(-self.torque_limit, self.torque_limit);
        let inertia = self.mass * self.length * self.length;
        let acc = (self.mass * self.gravity * self.length * self.theta.sin() + tau - self.damping * self.omega) / inertia;
        self.omega += acc * self.dt;
        self.theta += self.omega * self.dt;
        self.theta = (self.theta + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        self.t += 1;
        let reward = (-self.theta * self.theta).exp();
        let done = if self.t >= self.horizon { Done::Truncated } else { Done::No };
        Step { obs: self.obs(), reward, done }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unactuated_pendulum_falls() {
        let mut p = Pendulum::default();
        p.seed(1);
        p.reset();
        p.theta = 0.1;
        let mut peak: f64 = 0.0;
        for _ in 0..100 {
            p.step(&[0.0]);
            peak = peak.max(p.angle().abs());
        }
        assert!(peak > 3.0);
    }

    #[test]
    fn upright_at_rest_pays_full_reward() {
        let mut p = Pendulum { init_range: 0.0, ..Pendulum::default() };
        p.reset();
        let s = p.step(&[0.0]);
        assert_eq!(s.reward, 1.0);
    }

    #[test]
    fn horizon_truncates() {
        let mut p = Pendulum { horizon: 3, ..Pendulum::default() };
        p.reset();
        assert_eq!(p.step(&[0.0]).done, Done::No);
        assert_eq!(p.step(&[0.0]).done, Done::No);
        assert_eq!(p.step(&[0.0]).done, Done::Truncated);
    }
}
