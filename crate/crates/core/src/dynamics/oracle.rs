//! Contact-consistent gravity compensation and static stance placement.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::model::{FOOT_LINK, N_BASE, N_DOF, N_JOINTS};
use super::{DynamicsError, GenVec, Kinematics, SimState, Simulator};

/// Joint torque that minimizes `‖q̈‖²` at zero velocity when the flagged
/// feet may push on the ground.
///
/// Unknowns are the six joint torques and one normal force per sole point
/// of each supporting foot. The least-squares problem is solved in units
/// scaled by the torque limits and body weight, taking the minimum-norm
/// minimizer. Sole points that would need to pull on the ground are
/// dropped one at a time until every normal force is non-negative. The
/// result is clamped to the torque limits.
pub fn gravity_oracle(sim: &Simulator, state: &SimState, contact: [bool; 2]) -> Result<[f64; N_JOINTS], DynamicsError> {
    if !contact[0] && !contact[1] {
        return Err(DynamicsError::NoSupport);
    }
    let model = sim.model();
    let kin = Kinematics::positions(model, &state.q);
    let m = kin.mass_matrix(model);
    let chol = m.cholesky().ok_or(DynamicsError::SingularMassMatrix)?;

    let mut free = kin.gravity_force(model, model.gravity);
    for j in 0..N_JOINTS {
        free[N_BASE + j] += sim.passive_torque(state.q[N_BASE + j], 0.0, j);
    }
    let rhs = -chol.solve(&free);

    let limits = model.torque_limits();
    let weight = (model.total_mass() * model.gravity).max(1.0);

    // Candidate support points: (side, heel/toe) with their M⁻¹·J_zᵀ columns.
    let mut points: Vec<GenVec> = Vec::new();
    for side in 0..2 {
        if !contact[side] {
            continue;
        }
        for n in 0..2 {
            let jac = kin.point_jacobian(FOOT_LINK[side], kin.sole[side][n]);
            let col = GenVec::from_fn(|r, _| jac[1][r]);
            points.push(chol.solve(&col) * (0.5 * weight));
        }
    }
    let torque_cols: Vec<GenVec> = (0..N_JOINTS)
        .map(|j| {
            let mut e = GenVec::zeros();
            e[N_BASE + j] = limits[j];
            chol.solve(&e)
        })
        .collect();

    let mut active: Vec<usize> = (0..points.len()).collect();
    loop {
        let ncols = N_JOINTS + active.len();
        let b = DMatrix::from_fn(N_DOF, ncols, |r, c| {
            if c < N_JOINTS {
                torque_cols[c][r]
            } else {
                points[active[c - N_JOINTS]][r]
            }
        });
        let c = DVector::from_iterator(N_DOF, rhs.iter().copied());
        let svd = b.svd(true, true);
        let tol = 1e-10 * svd.singular_values.max().max(1e-300);
        let y = svd.solve(&c, tol).map_err(|_| DynamicsError::SingularMassMatrix)?;

        let worst = (0..active.len())
            .map(|k| (k, y[N_JOINTS + k]))
            .filter(|(_, f)| *f < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((k, _)) if active.len() > 1 => {
                active.remove(k);
            }
            _ => {
                return Ok(std::array::from_fn(|j| (y[j] * limits[j]).clamp(-limits[j], limits[j])));
            }
        }
    }
}

/// Places the robot at rest on the ground with joint angles `joints` and
/// base horizontal position `x`, solving for the base height and pitch at
/// which the penalty springs carry the body weight with no net moment.
pub fn settle_on_ground(sim: &Simulator, joints: &[f64; N_JOINTS], x: f64) -> Result<SimState, DynamicsError> {
    let model = sim.model();
    let weight = model.total_mass() * model.gravity;
    let k = sim.contact.stiffness;

    let residual = |z: f64, pitch: f64| -> Vector2<f64> {
        let s = sim.state_at(x, z, pitch, joints);
        let kin = Kinematics::positions(model, &s.q);
        let mut f = kin.gravity_force(model, model.gravity);
        for side in 0..2 {
            for n in 0..2 {
                let p = kin.sole[side][n];
                let depth = sim.terrain.height(p.x) - p.y;
                if depth > 0.0 {
                    kin.add_point_force(FOOT_LINK[side], p, super::Vec2::new(0.0, k * depth), &mut f);
                }
            }
        }
        Vector2::new(f[1] / weight.max(1.0), f[2] / weight.max(1.0))
    };

    let mut pitch = 0.0;
    let probe = sim.state_at(x, 0.0, pitch, joints);
    let kin = Kinematics::positions(model, &probe.q);
    let clearance = kin
        .sole
        .iter()
        .flatten()
        .map(|p| p.y - sim.terrain.height(p.x))
        .fold(f64::INFINITY, f64::min);
    let mut z = -clearance + weight / (4.0 * k);

    for _ in 0..100 {
        let r = residual(z, pitch);
        if r.norm() < 1e-12 {
            break;
        }
        let h = 1e-7;
        let dz = (residual(z + h, pitch) - r) / h;
        let dp = (residual(z, pitch + h) - r) / h;
        let jac = Matrix2::new(dz[0], dp[0], dz[1], dp[1]);
        let step = match jac.try_inverse() {
            Some(inv) => inv * r,
            // Out of contact: the vertical residual only falls with z.
            None => Vector2::new(-r[0] / dz[0].abs().max(1e-9), 0.0),
        };
        z -= step[0].clamp(-0.01, 0.01);
        pitch -= step[1].clamp(-0.05, 0.05);
    }
    Ok(sim.state_at(x, z, pitch, joints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robots::{make_robot, RobotVariant};

    #[test]
    fn settled_stance_carries_body_weight() {
        let model = make_robot(RobotVariant::A);
        let sim = Simulator::new(model.clone());
        let s = settle_on_ground(&sim, &model.default_pose, 0.0).unwrap();
        assert_eq!(s.contact, [true, true]);
        let fz: f64 = s.contact_force.iter().map(|f| f.y).sum();
        let w = model.total_mass() * model.gravity;
        assert!((fz - w).abs() < 1e-6 * w, "{fz} vs {w}");
    }

    #[test]
    fn no_support_is_an_error() {
        let model = make_robot(RobotVariant::A);
        let sim = Simulator::new(model.clone());
        let s = sim.state_at(0.0, 2.0, 0.0, &model.default_pose);
        assert!(matches!(gravity_oracle(&sim, &s, [false, false]), Err(DynamicsError::NoSupport)));
    }

    #[test]
    fn zero_gravity_needs_zero_torque() {
        let mut model = make_robot(RobotVariant::A);
        model.gravity = 0.0;
        let sim = Simulator::new(model.clone());
        let s = sim.state_at(0.0, 0.9, 0.0, &model.default_pose);
        let tau = gravity_oracle(&sim, &s, [true, true]).unwrap();
        assert!(tau.iter().all(|t| t.abs() < 1e-9), "{tau:?}");
    }

    #[test]
    fn symmetric_pose_gives_symmetric_torque() {
        let model = make_robot(RobotVariant::A);
        let sim = Simulator::new(model.clone());
        let s = settle_on_ground(&sim, &model.default_pose, 0.0).unwrap();
        let tau = gravity_oracle(&sim, &s, [true, true]).unwrap();
        for j in 0..3 {
            assert!((tau[j] - tau[j + 3]).abs() < 1e-6, "{tau:?}");
        }
        assert!(tau.iter().any(|t| t.abs() > 1.0));
    }

    #[test]
    fn oracle_torque_zeroes_acceleration_at_settled_stance() {
        let model = make_robot(RobotVariant::A);
        let sim = Simulator::new(model.clone());
        let s = settle_on_ground(&sim, &model.default_pose, 0.0).unwrap();
        let tau = gravity_oracle(&sim, &s, [true, true]).unwrap();
        let qdd = sim.acceleration(&s, &tau).unwrap();
        assert!(qdd.amax() < 1e-6, "{qdd}");
    }
}
