use nalgebra::{SMatrix, SVector};

use super::model::{RobotModel, FOOT_LINK, N_BASE, N_JOINTS};
use super::terrain::Terrain;
use super::{DynamicsError, GenVec, Kinematics, Vec2};

/// Penalty-contact constants, applied per sole point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
    pub friction: f64,
    /// Sliding speed at which friction reaches `tanh(1)` of its Coulomb bound, m/s.
    pub slip_velocity: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        ContactParams { stiffness: 5.0e4, damping: 500.0, friction: 0.8, slip_velocity: 0.05 }
    }
}

/// Soft joint stops and the smoothing of joint Coulomb friction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointStops {
    pub stiffness: f64,
    pub damping: f64,
    pub friction_velocity: f64,
}

impl Default for JointStops {
    fn default() -> Self {
        JointStops { stiffness: 2000.0, damping: 20.0, friction_velocity: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaseMode {
    #[default]
    Floating,
    /// Torso welded in place; used for bench tests of the leg chains.
    Fixed,
}

/// Generalized coordinates `[x, z, pitch, joints…]`, their rates, and the
/// contact readings consistent with them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub q: GenVec,
    pub v: GenVec,
    /// Right, left.
    pub contact: [bool; 2],
    /// Net (tangential, normal) ground reaction per foot, N.
    pub contact_force: [Vec2; 2],
    pub time: f64,
}

impl SimState {
    pub fn base_x(&self) -> f64 {
        self.q[0]
    }
    pub fn base_z(&self) -> f64 {
        self.q[1]
    }
    pub fn pitch(&self) -> f64 {
        self.q[2]
    }
    pub fn base_vx(&self) -> f64 {
        self.v[0]
    }
    pub fn joints(&self) -> [f64; N_JOINTS] {
        std::array::from_fn(|j| self.q[N_BASE + j])
    }
    pub fn joint_velocities(&self) -> [f64; N_JOINTS] {
        std::array::from_fn(|j| self.v[N_BASE + j])
    }
    pub fn set_joints(&mut self, q: &[f64; N_JOINTS]) {
        for j in 0..N_JOINTS {
            self.q[N_BASE + j] = q[j];
        }
    }
    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct Simulator {
    model: RobotModel,
    pub terrain: Terrain,
    pub contact: ContactParams,
    pub stops: JointStops,
    pub base: BaseMode,
}

/// Contact forces at each sole point plus per-foot aggregates.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ContactReading {
    pub flags: [bool; 2],
    pub foot_force: [Vec2; 2],
    pub point_force: [[Vec2; 2]; 2],
}

impl Simulator {
    pub fn new(model: RobotModel) -> Self {
        Simulator {
            model,
            terrain: Terrain::Flat,
            contact: ContactParams::default(),
            stops: JointStops::default(),
            base: BaseMode::Floating,
        }
    }

    pub fn with_terrain(mut self, terrain: Terrain) -> Self {
        self.terrain = terrain;
        self
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn set_model(&mut self, model: RobotModel) {
        self.model = model;
    }

    pub fn gravity(&self) -> f64 {
        self.model.gravity
    }

    /// State with the base at `(x, z, pitch)`, joints at `q`, at rest.
    pub fn state_at(&self, x: f64, z: f64, pitch: f64, q: &[f64; N_JOINTS]) -> SimState {
        let mut s = SimState {
            q: GenVec::zeros(),
            v: GenVec::zeros(),
            contact: [false; 2],
            contact_force: [Vec2::zeros(); 2],
            time: 0.0,
        };
        s.q[0] = x;
        s.q[1] = z;
        s.q[2] = pitch;
        s.set_joints(q);
        self.refresh_contact(&mut s);
        s
    }

    pub fn kinematics(&self, state: &SimState) -> Kinematics {
        Kinematics::compute(&self.model, &state.q, &state.v)
    }

    /// Recomputes contact flags and forces from the current configuration.
    pub fn refresh_contact(&self, state: &mut SimState) {
        let kin = self.kinematics(state);
        let c = self.contact_reading(&kin);
        state.contact = c.flags;
        state.contact_force = c.foot_force;
    }

    pub(crate) fn contact_reading(&self, kin: &Kinematics) -> ContactReading {
        let p = &self.contact;
        let mut r = ContactReading {
            flags: [false; 2],
            foot_force: [Vec2::zeros(); 2],
            point_force: [[Vec2::zeros(); 2]; 2],
        };
        for side in 0..2 {
            for n in 0..2 {
                let pos = kin.sole[side][n];
                let depth = self.terrain.height(pos.x) - pos.y;
                if depth > 0.0 {
                    r.flags[side] = true;
                    let vel = kin.sole_vel[side][n];
                    let normal = (p.stiffness * depth - p.damping * vel.y).max(0.0);
                    let tangential = -p.friction * normal * (vel.x / p.slip_velocity).tanh();
                    let f = Vec2::new(tangential, normal);
                    r.point_force[side][n] = f;
                    r.foot_force[side] += f;
                }
            }
        }
        r
    }

    /// Passive joint torque: viscous damping, smoothed Coulomb friction and
    /// soft joint stops.
    pub fn passive_torque(&self, q: f64, v: f64, joint: usize) -> f64 {
        let jt = &self.model.joints[joint];
        let s = &self.stops;
        let mut tau = -jt.damping * v - jt.friction * (v / s.friction_velocity).tanh();
        if q < jt.q_lo {
            tau += s.stiffness * (jt.q_lo - q) - s.damping * v;
        } else if q > jt.q_hi {
            tau -= s.stiffness * (q - jt.q_hi) + s.damping * v;
        }
        tau
    }

    /// Generalized acceleration for the given joint torques.
    pub fn acceleration(&self, state: &SimState, torque: &[f64; N_JOINTS]) -> Result<GenVec, DynamicsError> {
        let kin = self.kinematics(state);
        self.acceleration_with(&kin, state, torque)
    }

    fn acceleration_with(
        &self,
        kin: &Kinematics,
        state: &SimState,
        torque: &[f64; N_JOINTS],
    ) -> Result<GenVec, DynamicsError> {
        let mut f = kin.free_force(&self.model, self.model.gravity);
        for j in 0..N_JOINTS {
            let (q, v) = (state.q[N_BASE + j], state.v[N_BASE + j]);
            f[N_BASE + j] += torque[j] + self.passive_torque(q, v, j);
        }
        let contact = self.contact_reading(kin);
        for side in 0..2 {
            for n in 0..2 {
                let force = contact.point_force[side][n];
                if force != Vec2::zeros() {
                    kin.add_point_force(FOOT_LINK[side], kin.sole[side][n], force, &mut f);
                }
            }
        }
        let m = kin.mass_matrix(&self.model);
        match self.base {
            BaseMode::Floating => m
                .cholesky()
                .map(|c| c.solve(&f))
                .ok_or(DynamicsError::SingularMassMatrix),
            BaseMode::Fixed => {
                let mj: SMatrix<f64, N_JOINTS, N_JOINTS> = m.fixed_view::<N_JOINTS, N_JOINTS>(N_BASE, N_BASE).into_owned();
                let fj: SVector<f64, N_JOINTS> = f.fixed_rows::<N_JOINTS>(N_BASE).into_owned();
                let qdd = mj.cholesky().map(|c| c.solve(&fj)).ok_or(DynamicsError::SingularMassMatrix)?;
                let mut out = GenVec::zeros();
                out.fixed_rows_mut::<N_JOINTS>(N_BASE).copy_from(&qdd);
                Ok(out)
            }
        }
    }

    /// Advances one inner step with semi-implicit Euler. `torque` is the
    /// shaft torque at each joint (already saturated and scaled).
    pub fn step_inner(&self, state: &mut SimState, torque: &[f64; N_JOINTS], dt: f64) -> Result<(), DynamicsError> {
        let qdd = self.acceleration(state, torque)?;
        state.v += qdd * dt;
        state.q += state.v * dt;
        state.time += dt;
        if !state.is_finite() {
            return Err(DynamicsError::Diverged { time: state.time });
        }
        self.refresh_contact(state);
        Ok(())
    }

    pub fn mechanical_energy(&self, state: &SimState) -> f64 {
        let kin = self.kinematics(state);
        let rotor: f64 = (0..N_JOINTS).map(|j| 0.5 * self.model.joints[j].armature * state.v[N_BASE + j].powi(2)).sum();
        kin.kinetic_energy(&self.model) + rotor + kin.potential_energy(&self.model, self.model.gravity)
    }

    /// True when any non-foot link touches the ground: the torso (hip and
    /// head), both thighs and both shanks (knee points).
    pub fn non_foot_ground_contact(&self, state: &SimState) -> bool {
        let kin = Kinematics::positions(&self.model, &state.q);
        let points = [kin.origin[0], kin.tip[0], kin.tip[1], kin.tip[4]];
        points.iter().any(|p| p.y <= self.terrain.height(p.x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::{make_robot, RobotVariant};

    fn airborne(model: RobotModel) -> (Simulator, SimState) {
        let sim = Simulator::new(model);
        let q = sim.model().default_pose;
        let s = sim.state_at(0.0, 3.0, 0.0, &q);
        (sim, s)
    }

    #[test]
    fn free_fall_accelerates_at_gravity() {
        let (sim, s) = airborne(make_robot(RobotVariant::A));
        let a = sim.acceleration(&s, &[0.0; N_JOINTS]).unwrap();
        assert!((a[1] + 9.81).abs() < 1e-9, "{a}");
        for i in [0, 2, 3, 4, 5, 6, 7, 8] {
            assert!(a[i].abs() < 1e-9, "dof {i}: {}", a[i]);
        }
    }

    #[test]
    fn zero_gravity_rest_is_equilibrium() {
        let mut m = make_robot(RobotVariant::A);
        m.gravity = 0.0;
        let (sim, mut s) = airborne(m);
        let before = s.clone();
        for _ in 0..200 {
            sim.step_inner(&mut s, &[0.0; N_JOINTS], 5e-4).unwrap();
        }
        assert_eq!(s.q, before.q);
        assert_eq!(s.v, before.v);
    }

    #[test]
    fn mass_matrix_is_symmetric_positive_definite() {
        let (sim, mut s) = airborne(make_robot(RobotVariant::B));
        s.q[2] = 0.3;
        s.q[5] = -1.1;
        let m = sim.kinematics(&s).mass_matrix(sim.model());
        assert!((m - m.transpose()).abs().max() < 1e-12);
        assert!(m.cholesky().is_some());
        let total: f64 = sim.model().total_mass();
        assert!((m[(0, 0)] - total).abs() < 1e-12 && (m[(1, 1)] - total).abs() < 1e-12);
    }

    #[test]
    fn contact_flags_follow_penetration() {
        let sim = Simulator::new(make_robot(RobotVariant::A));
        let q = sim.model().default_pose;
        let high = sim.state_at(0.0, 2.0, 0.0, &q);
        assert_eq!(high.contact, [false, false]);
        assert_eq!(high.contact_force, [Vec2::zeros(); 2]);
        let low = sim.state_at(0.0, 0.5, 0.0, &q);
        assert_eq!(low.contact, [true, true]);
        assert!(low.contact_force.iter().all(|f| f.y > 0.0));
    }

    #[test]
    fn non_finite_state_reports_divergence() {
        let (sim, mut s) = airborne(make_robot(RobotVariant::A));
        s.v[4] = f64::NAN;
        let r = sim.step_inner(&mut s, &[0.0; N_JOINTS], 5e-4);
        assert!(matches!(r, Err(DynamicsError::Diverged { .. }) | Err(DynamicsError::SingularMassMatrix)));
    }
}
