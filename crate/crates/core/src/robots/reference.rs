use std::f64::consts::PI;

use crate::dynamics::{RobotModel, MIRROR_JOINTS, N_JOINTS};

pub const SQUAT_PERIOD: f64 = 6.0;
pub const WALK_PERIOD: f64 = 1.8;

/// Desired support pattern for a phase window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactPhase {
    Double,
    SingleRight,
    SingleLeft,
}

impl ContactPhase {
    /// Expected (right, left) contact flags.
    pub fn flags(self) -> [bool; 2] {
        match self {
            ContactPhase::Double => [true, true],
            ContactPhase::SingleRight => [true, false],
            ContactPhase::SingleLeft => [false, true],
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            ContactPhase::Double => ContactPhase::Double,
            ContactPhase::SingleRight => ContactPhase::SingleLeft,
            ContactPhase::SingleLeft => ContactPhase::SingleRight,
        }
    }

    /// Walking schedule: double support on `[0, 0.1) ∪ [0.5, 0.6)`, right
    /// stance on `[0.1, 0.5)`, left stance on `[0.6, 1)`.
    pub fn walk_schedule(phase: f64) -> Self {
        let p = phase.rem_euclid(1.0);
        if p < 0.1 || (0.5..0.6).contains(&p) {
            ContactPhase::Double
        } else if p < 0.5 {
            ContactPhase::SingleRight
        } else {
            ContactPhase::SingleLeft
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPose {
    pub base_pitch: f64,
    pub q: [f64; N_JOINTS],
}

impl RefPose {
    pub fn mirrored(&self) -> Self {
        RefPose { base_pitch: self.base_pitch, q: std::array::from_fn(|j| self.q[MIRROR_JOINTS[j]]) }
    }
}

fn lerp(a: &[f64; N_JOINTS], b: &[f64; N_JOINTS], t: f64) -> [f64; N_JOINTS] {
    std::array::from_fn(|j| a[j] + (b[j] - a[j]) * t)
}

/// Squat cycle: default → crouch over 2 s, hold 2 s, crouch → default over
/// 2 s. Periodic in `t` with period 6 s.
pub fn squat_reference(default: &[f64; N_JOINTS], crouch: &[f64; N_JOINTS], t: f64) -> RefPose {
    let t = t.rem_euclid(SQUAT_PERIOD);
    let q = if t < 2.0 {
        lerp(default, crouch, t / 2.0)
    } else if t < 4.0 {
        *crouch
    } else {
        lerp(crouch, default, (t - 4.0) / 2.0)
    };
    RefPose { base_pitch: 0.0, q }
}

/// Synthetic walking gait with period [`WALK_PERIOD`]. Each leg's hip swings
/// sinusoidally around its default angle, the knee flexes with a
/// `sin²` bump during that leg's swing window, and the ankle keeps the foot
/// parallel to the ground. The left leg runs half a cycle behind the right.
pub fn walk_reference(default: &[f64; N_JOINTS], phase: f64) -> (RefPose, ContactPhase) {
    let right = walk_leg(default, phase);
    let left = walk_leg(default, phase + 0.5);
    let q = [right[0], right[1], right[2], left[0], left[1], left[2]];
    (RefPose { base_pitch: 0.0, q }, ContactPhase::walk_schedule(phase))
}

const HIP_AMPLITUDE: f64 = 0.3;
const KNEE_AMPLITUDE: f64 = 0.5;

fn walk_leg(default: &[f64; N_JOINTS], phase: f64) -> [f64; 3] {
    let p = phase.rem_euclid(1.0);
    // Hip is furthest forward just after heel strike (φ = 0.05) and
    // furthest back at toe-off (φ = 0.55).
    let hip = default[0] + HIP_AMPLITUDE * (2.0 * PI * (p - 0.05)).cos();
    let swing = if p >= 0.6 { (PI * (p - 0.6) / 0.4).sin().powi(2) } else { 0.0 };
    let knee = default[1] - KNEE_AMPLITUDE * swing;
    let ankle = -(hip + knee);
    [hip, knee, ankle]
}

/// Task reference bound to a robot's default pose.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMotion {
    Squat { default: [f64; N_JOINTS], crouch: [f64; N_JOINTS] },
    Walk { default: [f64; N_JOINTS] },
}

impl ReferenceMotion {
    pub fn squat(model: &RobotModel) -> Self {
        let d = model.default_pose;
        // Deeper knee bend with the foot kept flat.
        let crouch = [d[0] + 0.5, d[1] - 1.0, d[2] + 0.5, d[3] + 0.5, d[4] - 1.0, d[5] + 0.5];
        ReferenceMotion::Squat { default: d, crouch }
    }

    pub fn walk(model: &RobotModel) -> Self {
        ReferenceMotion::Walk { default: model.default_pose }
    }

    /// Cycle period `T_ref`, s.
    pub fn period(&self) -> f64 {
        match self {
            ReferenceMotion::Squat { .. } => SQUAT_PERIOD,
            ReferenceMotion::Walk { .. } => WALK_PERIOD,
        }
    }

    pub fn pose_at(&self, phase: f64) -> RefPose {
        match self {
            ReferenceMotion::Squat { default, crouch } => squat_reference(default, crouch, phase * SQUAT_PERIOD),
            ReferenceMotion::Walk { default } => walk_reference(default, phase).0,
        }
    }

    pub fn contact_at(&self, phase: f64) -> ContactPhase {
        match self {
            ReferenceMotion::Squat { .. } => ContactPhase::Double,
            ReferenceMotion::Walk { .. } => ContactPhase::walk_schedule(phase),
        }
    }

    /// CSV of `phase, base_pitch, q0..q5, contact` sampled at `n` points.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("phase,base_pitch,q0,q1,q2,q3,q4,q5,contact\n");
        for i in 0..n {
            let phase = i as f64 / n as f64;
            let p = self.pose_at(phase);
            let label = match self.contact_at(phase) {
                ContactPhase::Double => "dsp",
                ContactPhase::SingleRight => "ssp_r",
                ContactPhase::SingleLeft => "ssp_l",
            };
            let q: Vec<String> = p.q.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("{phase},{},{},{label}\n", p.base_pitch, q.join(",")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::{make_robot, RobotVariant};

    fn default_a() -> [f64; N_JOINTS] {
        make_robot(RobotVariant::A).default_pose
    }

    #[test]
    fn squat_segments() {
        let m = make_robot(RobotVariant::A);
        let r = ReferenceMotion::squat(&m);
        let ReferenceMotion::Squat { default, crouch } = r.clone() else { unreachable!() };
        assert_eq!(squat_reference(&default, &crouch, 0.0).q, default);
        assert_eq!(squat_reference(&default, &crouch, 3.0).q, crouch);
        assert_eq!(squat_reference(&default, &crouch, 6.0).q, default);
        for i in 0..600 {
            assert_eq!(r.contact_at(i as f64 / 600.0), ContactPhase::Double);
        }
    }

    #[test]
    fn walk_schedule_windows() {
        assert_eq!(walk_reference(&default_a(), 0.25).1, ContactPhase::SingleRight);
        assert_eq!(ContactPhase::walk_schedule(0.05), ContactPhase::Double);
        assert_eq!(ContactPhase::walk_schedule(0.55), ContactPhase::Double);
        assert_eq!(ContactPhase::walk_schedule(0.75), ContactPhase::SingleLeft);
    }

    #[test]
    fn walk_left_leg_lags_right_by_half_cycle() {
        let d = default_a();
        for i in 0..1000 {
            let phase = i as f64 / 1000.0;
            let now = walk_reference(&d, phase).0;
            let later = walk_reference(&d, (phase + 0.5).rem_euclid(1.0)).0;
            for j in 0..3 {
                assert!((now.q[3 + j] - later.q[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn references_are_continuous_and_periodic() {
        let m = make_robot(RobotVariant::A);
        for r in [ReferenceMotion::walk(&m), ReferenceMotion::squat(&m)] {
            let n = 20_000;
            for i in 0..n {
                let a = r.pose_at(i as f64 / n as f64);
                let b = r.pose_at((i + 1) as f64 / n as f64);
                for j in 0..N_JOINTS {
                    assert!((a.q[j] - b.q[j]).abs() < 1e-3, "jump at {i}");
                }
            }
            let start = r.pose_at(0.0);
            let end = r.pose_at(1.0);
            for j in 0..N_JOINTS {
                assert!((start.q[j] - end.q[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn contact_windows_partition_the_cycle() {
        let (mut dsp, mut r, mut l) = (0, 0, 0);
        let n = 100_000;
        for i in 0..n {
            match ContactPhase::walk_schedule(i as f64 / n as f64) {
                ContactPhase::Double => dsp += 1,
                ContactPhase::SingleRight => r += 1,
                ContactPhase::SingleLeft => l += 1,
            }
        }
        assert_eq!(dsp + r + l, n);
        assert_eq!((dsp, r, l), (20_000, 40_000, 40_000));
    }
}
