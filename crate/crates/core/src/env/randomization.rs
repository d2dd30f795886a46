//! Per-episode dynamics randomization.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RobotModel, N_JOINTS, N_LINKS};

/// Sampling ranges, as multipliers of the nominal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizationRanges {
    pub mass: (f64, f64),
    pub inertia: (f64, f64),
    pub com: (f64, f64),
    pub damping: (f64, f64),
    pub friction: (f64, f64),
    pub motor_constant: (f64, f64),
    pub delay: (f64, f64),
    pub leg_length: (f64, f64),
}

impl Default for RandomizationRanges {
    fn default() -> Self {
        RandomizationRanges {
            mass: (0.6, 1.4),
            inertia: (0.6, 1.4),
            com: (0.6, 1.4),
            damping: (0.6, 1.4),
            friction: (0.6, 1.4),
            motor_constant: (1.0, 1.1),
            delay: (0.5, 1.5),
            leg_length: (0.7, 1.3),
        }
    }
}

impl RandomizationRanges {
    /// Every category in `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Self {
        RandomizationRanges {
            mass: (lo, hi),
            inertia: (lo, hi),
            com: (lo, hi),
            damping: (lo, hi),
            friction: (lo, hi),
            motor_constant: (lo, hi),
            delay: (lo, hi),
            leg_length: (lo, hi),
        }
    }
}

/// How scales are drawn within a category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Independent draw for every link or joint.
    #[default]
    PerElement,
    /// One draw per category shared by every link or joint.
    PerCategory,
}

/// Sampled multipliers applied to a nominal model for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationSpec {
    pub mass: [f64; N_LINKS],
    pub inertia: [f64; N_LINKS],
    pub com: [f64; N_LINKS],
    pub damping: [f64; N_JOINTS],
    pub friction: [f64; N_JOINTS],
    pub motor_constant: [f64; N_JOINTS],
    pub delay: f64,
    pub leg_length: f64,
}

/// Names of the eight collapsed categories, in [`RandomizationSpec::category_scales`] order.
pub const CATEGORY_NAMES: [&str; 8] =
    ["mass", "inertia", "com", "damping", "friction", "motor_constant", "delay", "leg_length"];

fn draw<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn draw_n<R: Rng + ?Sized, const N: usize>(rng: &mut R, range: (f64, f64), mode: SampleMode) -> [f64; N] {
    match mode {
        SampleMode::PerElement => std::array::from_fn(|_| draw(rng, range)),
        SampleMode::PerCategory => [draw(rng, range); N],
    }
}

impl Default for RandomizationSpec {
    fn default() -> Self {
        Self::identity()
    }
}

impl RandomizationSpec {
    pub fn identity() -> Self {
        RandomizationSpec {
            mass: [1.0; N_LINKS],
            inertia: [1.0; N_LINKS],
            com: [1.0; N_LINKS],
            damping: [1.0; N_JOINTS],
            friction: [1.0; N_JOINTS],
            motor_constant: [1.0; N_JOINTS],
            delay: 1.0,
            leg_length: 1.0,
        }
    }

    /// Draws a spec. The leg-length scale stays at 1 unless `leg_length` is set.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, ranges: &RandomizationRanges, mode: SampleMode, leg_length: bool) -> Self {
        RandomizationSpec {
            mass: draw_n(rng, ranges.mass, mode),
            inertia: draw_n(rng, ranges.inertia, mode),
            com: draw_n(rng, ranges.com, mode),
            damping: draw_n(rng, ranges.damping, mode),
            friction: draw_n(rng, ranges.friction, mode),
            motor_constant: draw_n(rng, ranges.motor_constant, mode),
            delay: draw(rng, ranges.delay),
            leg_length: if leg_length { draw(rng, ranges.leg_length) } else { 1.0 },
        }
    }

    /// One representative scale per category (the mean over elements).
    pub fn category_scales(&self) -> [f64; 8] {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        [
            mean(&self.mass),
            mean(&self.inertia),
            mean(&self.com),
            mean(&self.damping),
            mean(&self.friction),
            mean(&self.motor_constant),
            self.delay,
            self.leg_length,
        ]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Nominal model with every multiplier applied. Leg length rescales the
    /// thigh and shank lengths together with their centre-of-mass offsets.
    pub fn apply(&self, nominal: &RobotModel) -> RobotModel {
        let mut m = nominal.clone();
        for (i, link) in m.links.iter_mut().enumerate() {
            link.mass *= self.mass[i];
            link.inertia *= self.inertia[i];
            link.com_offset *= self.com[i];
        }
        for i in [1, 2, 4, 5] {
            m.links[i].length *= self.leg_length;
            m.links[i].com_offset *= self.leg_length;
        }
        for (j, joint) in m.joints.iter_mut().enumerate() {
            joint.damping *= self.damping[j];
            joint.friction *= self.friction[j];
            joint.motor_constant *= self.motor_constant[j];
        }
        m.delay *= self.delay;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::{make_robot, RobotVariant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_delays_cover_two_to_six_ms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nominal = make_robot(RobotVariant::A);
        let ranges = RandomizationRanges::default();
        let delays: Vec<f64> = (0..1000)
            .map(|_| RandomizationSpec::sample(&mut rng, &ranges, SampleMode::PerElement, false).apply(&nominal).delay)
            .collect();
        assert!(delays.iter().all(|d| (0.002..=0.006).contains(d)));
        let mean = delays.iter().sum::<f64>() / 1000.0;
        assert!((mean - 0.004).abs() < 0.0002, "mean {mean}");
    }

    #[test]
    fn samples_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = RandomizationRanges::default();
        for _ in 0..200 {
            let s = RandomizationSpec::sample(&mut rng, &r, SampleMode::PerElement, true);
            assert!(s.mass.iter().chain(&s.inertia).chain(&s.com).all(|v| (0.6..1.4).contains(v)));
            assert!(s.motor_constant.iter().all(|v| (1.0..1.1).contains(v)));
            assert!((0.7..1.3).contains(&s.leg_length));
        }
    }

    #[test]
    fn per_category_shares_one_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = RandomizationSpec::sample(&mut rng, &RandomizationRanges::uniform(0.7, 1.3), SampleMode::PerCategory, true);
        assert!(s.mass.iter().all(|v| *v == s.mass[0]));
        assert!(s.damping.iter().all(|v| *v == s.damping[0]));
    }

    #[test]
    fn identity_leaves_model_unchanged() {
        let m = make_robot(RobotVariant::B);
        assert_eq!(RandomizationSpec::identity().apply(&m), m);
    }

    #[test]
    fn leg_length_scales_leg_segments_only() {
        let m = make_robot(RobotVariant::A);
        let mut s = RandomizationSpec::identity();
        s.leg_length = 1.2;
        let r = s.apply(&m);
        assert!((r.links[1].length - 1.2 * m.links[1].length).abs() < 1e-12);
        assert_eq!(r.links[0].length, m.links[0].length);
        assert_eq!(r.links[3].length, m.links[3].length);
    }
}
