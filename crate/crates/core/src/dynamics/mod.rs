//! Planar rigid-body simulation of a floating-base biped.
//!
//! The simulator integrates the manipulator equation with semi-implicit
//! Euler at the inner-loop rate (2 kHz by default). Ground contact is a
//! spring-damper penalty at the heel and toe of each foot with regularized
//! Coulomb friction. The actuator layer ([`actuator`]) adds PD tracking,
//! command delay and the motor-constant scale on top of [`Simulator::step_inner`].

pub mod actuator;
mod kinematics;
pub mod model;
pub mod oracle;
mod sim;
pub mod terrain;
pub mod trace;

pub use actuator::{pd_torque, run_control_window, Actuator, Command, DelayBuffer, WindowStats};
pub use kinematics::Kinematics;
pub use model::{
    FootGeometry, Joint, Link, LinkRole, PdGains, RobotModel, FOOT_LINK, JOINT_NAMES,
    LINK_NAMES, MIRROR_JOINTS, N_BASE, N_DOF, N_JOINTS, N_LINKS,
};
pub use oracle::{gravity_oracle, settle_on_ground};
pub use sim::{BaseMode, ContactParams, SimState, Simulator};
pub use terrain::Terrain;
pub use trace::{TraceRow, TRACE_HEADER};

use nalgebra::{SMatrix, SVector, Vector2};

pub type Vec2 = Vector2<f64>;
pub type GenVec = SVector<f64, N_DOF>;
pub type MassMatrix = SMatrix<f64, N_DOF, N_DOF>;

/// Inner-loop rate of the actuator/simulation loop.
pub const DEFAULT_INNER_DT: f64 = 1.0 / 2000.0;

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("simulation diverged at t = {time:.4} s")]
    Diverged { time: f64 },
    #[error("mass matrix is not positive definite")]
    SingularMassMatrix,
    #[error("gravity compensation needs at least one supporting foot")]
    NoSupport,
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("cannot parse robot description: {0}")]
    ModelParse(String),
}

/// 2D cross product `a × b` (out-of-plane component).
#[inline]
pub(crate) fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Derivative of `R(θ)·r` with respect to θ, i.e. `r` rotated by +90°.
#[inline]
pub(crate) fn perp(r: Vec2) -> Vec2 {
    Vec2::new(-r.y, r.x)
}

#[inline]
pub(crate) fn rotate(angle: f64, r: [f64; 2]) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * r[0] - s * r[1], s * r[0] + c * r[1])
}
