//! Policy input assembly: encoder noise, velocity estimation and phase.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::N_JOINTS;

/// Observation length: pitch, joint angles, filtered joint velocities,
/// phase sine and cosine, commanded velocity.
pub const OBS_DIM: usize = 2 * N_JOINTS + 4;

/// Fixed per-group multipliers applied before the observation reaches the
/// network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObsScale {
    pub pitch: f64,
    pub q: f64,
    pub qdot: f64,
    pub v_cmd: f64,
}

impl Default for ObsScale {
    fn default() -> Self {
        ObsScale { pitch: 1.0, q: 1.0, qdot: 0.1, v_cmd: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub pitch: f64,
    pub q: [f64; N_JOINTS],
    pub qdot_lpf: [f64; N_JOINTS],
    pub sin_phase: f64,
    pub cos_phase: f64,
    pub v_cmd: f64,
}

impl Observation {
    pub fn new(pitch: f64, q: [f64; N_JOINTS], qdot_lpf: [f64; N_JOINTS], phase: f64, v_cmd: f64) -> Self {
        let (s, c) = (2.0 * std::f64::consts::PI * phase).sin_cos();
        Observation { pitch, q, qdot_lpf, sin_phase: s, cos_phase: c, v_cmd }
    }

    pub fn to_vec(&self, scale: &ObsScale) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBS_DIM);
        v.push(self.pitch * scale.pitch);
        v.extend(self.q.iter().map(|x| x * scale.q));
        v.extend(self.qdot_lpf.iter().map(|x| x * scale.qdot));
        v.push(self.sin_phase);
        v.push(self.cos_phase);
        v.push(self.v_cmd * scale.v_cmd);
        v
    }
}

/// `fmod(φ + Δt/T_ref + a_δφ, 1)` with `a_δφ` clamped to `[0, Δt]`.
pub fn advance_phase(phase: f64, dt: f64, period: f64, a_dphi: f64) -> f64 {
    let a = a_dphi.clamp(0.0, dt);
    let p = (phase + dt / period + a).rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs.
    if p >= 1.0 {
        0.0
    } else {
        p
    }
}

/// Smoothing factor of the first-order low-pass filter.
pub fn lpf_alpha(dt: f64, cutoff: f64) -> f64 {
    dt / (dt + 1.0 / (2.0 * std::f64::consts::PI * cutoff))
}

/// Noisy encoder model plus finite-difference velocity and low-pass filter.
#[derive(Debug, Clone)]
pub struct SensorFilter {
    noise: Option<Normal<f64>>,
    alpha: f64,
    dt: f64,
    prev_q: [f64; N_JOINTS],
    qdot_lpf: [f64; N_JOINTS],
}

impl SensorFilter {
    pub fn new(noise_std: f64, cutoff: f64, dt: f64) -> Self {
        let noise = (noise_std > 0.0).then(|| Normal::new(0.0, noise_std).expect("finite noise std"));
        SensorFilter { noise, alpha: lpf_alpha(dt, cutoff), dt, prev_q: [0.0; N_JOINTS], qdot_lpf: [0.0; N_JOINTS] }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn measure<R: Rng + ?Sized>(&self, q: &[f64; N_JOINTS], rng: &mut R) -> [f64; N_JOINTS] {
        match &self.noise {
            Some(n) => std::array::from_fn(|j| q[j] + n.sample(rng)),
            None => *q,
        }
    }

    /// Starts a new episode: velocity estimate zero, difference anchored at
    /// the first measurement.
    pub fn reset<R: Rng + ?Sized>(&mut self, q: &[f64; N_JOINTS], rng: &mut R) -> [f64; N_JOINTS] {
        let m = self.measure(q, rng);
        self.prev_q = m;
        self.qdot_lpf = [0.0; N_JOINTS];
        m
    }

    /// Measures `q` one policy step after the previous call. Returns the
    /// noisy angles and the filtered velocity.
    pub fn update<R: Rng + ?Sized>(&mut self, q: &[f64; N_JOINTS], rng: &mut R) -> ([f64; N_JOINTS], [f64; N_JOINTS]) {
        let m = self.measure(q, rng);
        for j in 0..N_JOINTS {
            let raw = (m[j] - self.prev_q[j]) / self.dt;
            self.qdot_lpf[j] += self.alpha * (raw - self.qdot_lpf[j]);
        }
        self.prev_q = m;
        (m, self.qdot_lpf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phase_arithmetic() {
        assert!((advance_phase(0.0, 0.004, 1.8, 0.0) - 0.004 / 1.8).abs() < 1e-12);
        assert!((advance_phase(0.999, 0.0022, 1.0, 0.0) - 0.0012).abs() < 1e-12);
        let base = advance_phase(0.2, 0.004, 1.0, 0.0) - 0.2;
        let doubled = advance_phase(0.2, 0.004, 1.0, 0.004) - 0.2;
        assert!((doubled - 2.0 * base).abs() < 1e-12);
        assert_eq!(advance_phase(0.3, 0.004, 1.8, 5.0), advance_phase(0.3, 0.004, 1.8, 0.004));
        assert_eq!(advance_phase(0.3, 0.004, 1.8, -5.0), advance_phase(0.3, 0.004, 1.8, 0.0));
    }

    #[test]
    fn phase_features_on_unit_circle() {
        for i in 0..100 {
            let o = Observation::new(0.0, [0.0; N_JOINTS], [0.0; N_JOINTS], i as f64 / 100.0, 0.0);
            assert!((o.sin_phase.powi(2) + o.cos_phase.powi(2) - 1.0).abs() < 1e-15);
            assert_eq!(o.to_vec(&ObsScale::default()).len(), OBS_DIM);
        }
    }

    #[test]
    fn noiseless_rest_reads_zero_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = SensorFilter::new(0.0, 4.0, 0.004);
        let q = [0.3; N_JOINTS];
        f.reset(&q, &mut rng);
        for _ in 0..10 {
            assert_eq!(f.update(&q, &mut rng).1, [0.0; N_JOINTS]);
        }
    }

    #[test]
    fn filtered_velocity_tracks_constant_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dt = 0.004;
        let mut f = SensorFilter::new(0.0, 4.0, dt);
        let v = 0.7;
        let mut q = [0.0; N_JOINTS];
        f.reset(&q, &mut rng);
        // Five time constants of 1/(2π·4) s.
        let steps = (5.0 / (2.0 * std::f64::consts::PI * 4.0) / dt).ceil() as usize;
        let mut last = [0.0; N_JOINTS];
        for _ in 0..steps {
            q.iter_mut().for_each(|x| *x += v * dt);
            last = f.update(&q, &mut rng).1;
        }
        assert!((last[0] - v).abs() < 0.01 * v, "{}", last[0]);
    }

    #[test]
    fn encoder_noise_has_configured_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = SensorFilter::new(1e-4, 4.0, 0.004);
        let n = 100_000 / N_JOINTS + 1;
        let samples: Vec<f64> = (0..n).flat_map(|_| f.measure(&[0.0; N_JOINTS], &mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        assert!((var.sqrt() - 1e-4).abs() < 5e-6, "{}", var.sqrt());
    }
}
