//! Robot description: a sagittal-plane biped with a floating torso and two
//! three-joint legs (hip, knee, ankle).
//!
//! The topology is fixed. Link order is
//! `[torso, thigh_r, shank_r, foot_r, thigh_l, shank_l, foot_l]` and joint
//! `j` drives link `j + 1`, giving the joint order
//! `[hip_r, knee_r, ankle_r, hip_l, knee_l, ankle_l]`.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::DynamicsError;

pub const N_LINKS: usize = 7;
pub const N_JOINTS: usize = 6;
/// Floating base (x, z, pitch) plus the six joints.
pub const N_DOF: usize = 9;
pub const N_BASE: usize = 3;

pub const LINK_NAMES: [&str; N_LINKS] = [
    "torso", "thigh_r", "shank_r", "foot_r", "thigh_l", "shank_l", "foot_l",
];
pub const JOINT_NAMES: [&str; N_JOINTS] = [
    "hip_r", "knee_r", "ankle_r", "hip_l", "knee_l", "ankle_l",
];

/// Parent link of every link; the torso is the floating root.
pub(crate) const PARENT: [Option<usize>; N_LINKS] =
    [None, Some(0), Some(1), Some(2), Some(0), Some(4), Some(5)];

/// Joints between the torso and each link (inclusive of the link's own joint).
pub(crate) const CHAIN: [&[usize]; N_LINKS] = [&[], &[0], &[0, 1], &[0, 1, 2], &[3], &[3, 4], &[3, 4, 5]];

/// Foot link index per side (right = 0, left = 1).
pub const FOOT_LINK: [usize; 2] = [3, 6];

/// Index permutation that swaps the right and left leg joints.
pub const MIRROR_JOINTS: [usize; N_JOINTS] = [3, 4, 5, 0, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkRole {
    Torso,
    Thigh,
    Shank,
    Foot,
}

impl LinkRole {
    /// Unit axis of the link in its own frame: torso points up, leg
    /// segments hang down, the foot points forward from the ankle.
    pub fn axis(self) -> [f64; 2] {
        match self {
            LinkRole::Torso => [0.0, 1.0],
            LinkRole::Thigh | LinkRole::Shank => [0.0, -1.0],
            LinkRole::Foot => [1.0, 0.0],
        }
    }

    fn for_index(i: usize) -> Self {
        match i {
            0 => LinkRole::Torso,
            1 | 4 => LinkRole::Thigh,
            2 | 5 => LinkRole::Shank,
            _ => LinkRole::Foot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    /// kg
    pub mass: f64,
    /// Rotational inertia about the center of mass, kg·m².
    pub inertia: f64,
    /// Distance from the parent joint to the child joint along the link axis, m.
    pub length: f64,
    /// Distance from the parent joint to the center of mass along the link axis, m.
    pub com_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub q_lo: f64,
    pub q_hi: f64,
    /// N·m
    pub torque_limit: f64,
    /// Viscous damping, N·m·s/rad.
    #[serde(default)]
    pub damping: f64,
    /// Coulomb friction magnitude, N·m.
    #[serde(default)]
    pub friction: f64,
    /// Multiplicative torque scale between command and shaft torque.
    #[serde(default = "one")]
    pub motor_constant: f64,
    /// Reflected rotor inertia added to the joint's diagonal of the mass
    /// matrix, kg·m².
    #[serde(default)]
    pub armature: f64,
}

fn one() -> f64 {
    1.0
}

impl Joint {
    pub fn range(&self) -> f64 {
        self.q_hi - self.q_lo
    }
}

/// Sole contact points relative to the ankle, in the foot frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootGeometry {
    /// Heel offset along the foot axis (negative = behind the ankle), m.
    pub heel: f64,
    /// Toe offset along the foot axis, m.
    pub toe: f64,
    /// Sole depth below the ankle, m.
    pub sole: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: [f64; N_JOINTS],
    pub kd: [f64; N_JOINTS],
}

impl PdGains {
    /// Stiffness divided by `s_p`; damping divided by `sqrt(s_p)` so the
    /// damping ratio of each joint is preserved.
    pub fn scaled(&self, s_p: f64) -> PdGains {
        let mut g = self.clone();
        for j in 0..N_JOINTS {
            g.kp[j] /= s_p;
            g.kd[j] /= s_p.sqrt();
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub default_pose: [f64; N_JOINTS],
    pub foot: FootGeometry,
    /// Nominal PD gains. Derived from the model when absent from the file.
    #[serde(default)]
    pub pd_gains: Option<PdGains>,
    /// Nominal actuation delay, s.
    #[serde(default = "default_delay")]
    pub delay: f64,
}

fn default_gravity() -> f64 {
    9.81
}

fn default_delay() -> f64 {
    0.004
}

impl RobotModel {
    pub fn from_toml_str(text: &str) -> Result<Self, DynamicsError> {
        let model: RobotModel =
            toml::from_str(text).map_err(|e| DynamicsError::ModelParse(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, DynamicsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DynamicsError::ModelParse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("robot model is always serializable")
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::InvalidModel(msg));
        if self.links.len() != N_LINKS {
            return bad(format!("expected {N_LINKS} links, got {}", self.links.len()));
        }
        if self.joints.len() != N_JOINTS {
            return bad(format!("expected {N_JOINTS} joints, got {}", self.joints.len()));
        }
        for l in &self.links {
            if !(l.mass > 0.0 && l.inertia > 0.0 && l.length > 0.0) {
                return bad(format!("link {} needs positive mass, inertia and length", l.name));
            }
        }
        for (j, jt) in self.joints.iter().enumerate() {
            if !(jt.q_lo < jt.q_hi) {
                return bad(format!("joint {} has q_lo >= q_hi", jt.name));
            }
            if !(jt.torque_limit > 0.0) {
                return bad(format!("joint {} needs a positive torque limit", jt.name));
            }
            let q = self.default_pose[j];
            if q < jt.q_lo || q > jt.q_hi {
                return bad(format!("default pose of {} outside limits", jt.name));
            }
        }
        if !(self.foot.toe > self.foot.heel && self.foot.sole > 0.0) {
            return bad("foot geometry needs toe > heel and positive sole depth".into());
        }
        if let Some(g) = &self.pd_gains {
            if g.kp.iter().chain(g.kd.iter()).any(|v| *v < 0.0) {
                return bad("PD gains must be non-negative".into());
            }
        }
        Ok(())
    }

    pub fn role(&self, link: usize) -> LinkRole {
        LinkRole::for_index(link)
    }

    pub fn total_mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn torque_limits(&self) -> [f64; N_JOINTS] {
        std::array::from_fn(|j| self.joints[j].torque_limit)
    }

    pub fn joint_ranges(&self) -> [f64; N_JOINTS] {
        std::array::from_fn(|j| self.joints[j].range())
    }

    pub fn clamp_to_limits(&self, q: &mut [f64; N_JOINTS]) {
        for (j, v) in q.iter_mut().enumerate() {
            *v = v.clamp(self.joints[j].q_lo, self.joints[j].q_hi);
        }
    }

    /// Nominal gains, falling back to [`RobotModel::derived_gains`].
    pub fn gains(&self) -> PdGains {
        self.pd_gains.clone().unwrap_or_else(|| self.derived_gains())
    }

    /// Critically damped gains at a 4 Hz bandwidth on each joint's dominant
    /// inertia (see [`RobotModel::dominant_inertia`]).
    pub fn derived_gains(&self) -> PdGains {
        let omega = 2.0 * std::f64::consts::PI * 4.0;
        let inertia = self.dominant_inertia();
        PdGains {
            kp: std::array::from_fn(|j| inertia[j] * omega * omega),
            kd: std::array::from_fn(|j| 2.0 * inertia[j] * omega),
        }
    }

    /// Inertia a joint drives when its foot is unloaded: the rigid assembly
    /// distal to the joint, about the joint axis in the default pose, plus
    /// the joint's armature.
    pub fn dominant_inertia(&self) -> [f64; N_JOINTS] {
        let mut q = super::GenVec::zeros();
        for j in 0..N_JOINTS {
            q[N_BASE + j] = self.default_pose[j];
        }
        let kin = super::Kinematics::positions(self, &q);
        std::array::from_fn(|j| {
            let axis = kin.origin[j + 1];
            let distal: f64 = (0..N_LINKS)
                .filter(|i| CHAIN[*i].contains(&j))
                .map(|i| {
                    let l = &self.links[i];
                    l.inertia + l.mass * (kin.com[i] - axis).norm_squared()
                })
                .sum();
            distal + self.joints[j].armature
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RobotModel {
        crate::robots::make_robot(crate::robots::RobotVariant::A)
    }

    #[test]
    fn rejects_inverted_limits() {
        let mut m = sample();
        m.joints[1].q_lo = 1.0;
        m.joints[1].q_hi = 0.5;
        assert!(matches!(m.validate(), Err(DynamicsError::InvalidModel(_))));
    }

    #[test]
    fn rejects_default_pose_outside_limits() {
        let mut m = sample();
        m.default_pose[2] = 5.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_nonpositive_mass() {
        let mut m = sample();
        m.links[0].mass = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let m = sample();
        let back = RobotModel::from_toml_str(&m.to_toml_string()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn scaled_gains_preserve_damping_ratio() {
        let g = sample().gains();
        let s = g.scaled(4.0);
        for j in 0..N_JOINTS {
            let z0 = g.kd[j] / g.kp[j].sqrt();
            let z1 = s.kd[j] / s.kp[j].sqrt();
            assert!((z0 - z1).abs() < 1e-12 * z0);
        }
    }
}
