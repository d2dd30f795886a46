use rand::Rng;
use rand_distr::StandardNormal;

use super::{Mlp, NetError};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Diagonal Gaussian policy with a fixed standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean: Mlp,
    std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean: Mlp, std: Vec<f64>) -> Result<Self, NetError> {
        if std.len() != mean.output_dim() {
            return Err(NetError::Dim { expected: mean.output_dim(), got: std.len() });
        }
        if std.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(NetError::Corrupt("action std must be positive and finite".into()));
        }
        Ok(GaussianPolicy { mean, std })
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn act_dim(&self) -> usize {
        self.std.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.mean.input_dim()
    }

    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>, NetError> {
        self.mean.forward(obs)
    }

    /// Draws `a = μ + Σ⊙ε` around a precomputed mean.
    pub fn sample_around<R: Rng + ?Sized>(&self, mean: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
        let a: Vec<f64> = mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| {
                let e: f64 = rng.sample(StandardNormal);
                m + s * e
            })
            .collect();
        let lp = self.log_prob(mean, &a);
        (a, lp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64), NetError> {
        let mean = self.mean_action(obs)?;
        Ok(self.sample_around(&mean, rng))
    }

    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        mean.iter()
            .zip(action)
            .zip(&self.std)
            .map(|((m, a), s)| {
                let z = (a - m) / s;
                -0.5 * z * z - s.ln() - LN_SQRT_2PI
            })
            .sum()
    }
}
