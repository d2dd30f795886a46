use super::model::{LinkRole, RobotModel, CHAIN, FOOT_LINK, N_BASE, N_JOINTS, N_LINKS, PARENT};
use super::{cross, perp, rotate, GenVec, MassMatrix, Vec2};

/// Link frames, centers of mass and their velocity-product accelerations
/// (the acceleration each point would have with zero generalized
/// acceleration).
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub angle: [f64; N_LINKS],
    pub omega: [f64; N_LINKS],
    /// Position of the joint that attaches each link (the base origin for
    /// the torso and both thighs).
    pub origin: [Vec2; N_LINKS],
    pub origin_vel: [Vec2; N_LINKS],
    origin_acc: [Vec2; N_LINKS],
    pub com: [Vec2; N_LINKS],
    pub com_vel: [Vec2; N_LINKS],
    com_acc: [Vec2; N_LINKS],
    /// Heel and toe positions, indexed `[side][0 = heel, 1 = toe]`.
    pub sole: [[Vec2; 2]; 2],
    pub sole_vel: [[Vec2; 2]; 2],
    /// Distal end of each link (head of the torso, knee, ankle, toe).
    pub tip: [Vec2; N_LINKS],
}

impl Kinematics {
    pub fn positions(model: &RobotModel, q: &GenVec) -> Self {
        Self::compute(model, q, &GenVec::zeros())
    }

    pub fn compute(model: &RobotModel, q: &GenVec, v: &GenVec) -> Self {
        let zero = Vec2::zeros();
        let mut k = Kinematics {
            angle: [0.0; N_LINKS],
            omega: [0.0; N_LINKS],
            origin: [zero; N_LINKS],
            origin_vel: [zero; N_LINKS],
            origin_acc: [zero; N_LINKS],
            com: [zero; N_LINKS],
            com_vel: [zero; N_LINKS],
            com_acc: [zero; N_LINKS],
            sole: [[zero; 2]; 2],
            sole_vel: [[zero; 2]; 2],
            tip: [zero; N_LINKS],
        };
        k.angle[0] = q[2];
        k.omega[0] = v[2];
        k.origin[0] = Vec2::new(q[0], q[1]);
        k.origin_vel[0] = Vec2::new(v[0], v[1]);

        let mut tip_rel = [zero; N_LINKS];
        for i in 0..N_LINKS {
            let link = &model.links[i];
            let axis = model.role(i).axis();
            if let Some(p) = PARENT[i] {
                let j = i - 1;
                k.angle[i] = k.angle[p] + q[N_BASE + j];
                k.omega[i] = k.omega[p] + v[N_BASE + j];
                if p == 0 {
                    k.origin[i] = k.origin[0];
                    k.origin_vel[i] = k.origin_vel[0];
                    k.origin_acc[i] = k.origin_acc[0];
                } else {
                    let r = tip_rel[p];
                    let w = k.omega[p];
                    k.origin[i] = k.origin[p] + r;
                    k.origin_vel[i] = k.origin_vel[p] + perp(r) * w;
                    k.origin_acc[i] = k.origin_acc[p] - r * (w * w);
                }
            }
            let th = k.angle[i];
            let w = k.omega[i];
            tip_rel[i] = rotate(th, [axis[0] * link.length, axis[1] * link.length]);
            k.tip[i] = k.origin[i] + tip_rel[i];
            let c = rotate(th, [axis[0] * link.com_offset, axis[1] * link.com_offset]);
            k.com[i] = k.origin[i] + c;
            k.com_vel[i] = k.origin_vel[i] + perp(c) * w;
            k.com_acc[i] = k.origin_acc[i] - c * (w * w);
        }

        let f = &model.foot;
        for side in 0..2 {
            let l = FOOT_LINK[side];
            let (th, w) = (k.angle[l], k.omega[l]);
            for (n, along) in [f.heel, f.toe].into_iter().enumerate() {
                let r = rotate(th, [along, -f.sole]);
                k.sole[side][n] = k.origin[l] + r;
                k.sole_vel[side][n] = k.origin_vel[l] + perp(r) * w;
            }
        }
        debug_assert_eq!(model.role(FOOT_LINK[0]), LinkRole::Foot);
        k
    }

    /// Joint-space inertia matrix.
    pub fn mass_matrix(&self, model: &RobotModel) -> MassMatrix {
        let mut m = MassMatrix::zeros();
        let mut cols = [0usize; 6];
        let mut jv = [Vec2::zeros(); 6];
        for i in 0..N_LINKS {
            let link = &model.links[i];
            let c = self.com[i];
            let n = self.link_columns(i, c, &mut cols, &mut jv);
            for a in 0..n {
                let wa = if a >= 2 { 1.0 } else { 0.0 };
                for b in a..n {
                    let wb = if b >= 2 { 1.0 } else { 0.0 };
                    let val = link.mass * jv[a].dot(&jv[b]) + link.inertia * wa * wb;
                    let (ra, rb) = (cols[a], cols[b]);
                    m[(ra, rb)] += val;
                    if ra != rb {
                        m[(rb, ra)] += val;
                    }
                }
            }
        }
        for (j, joint) in model.joints.iter().enumerate() {
            m[(N_BASE + j, N_BASE + j)] += joint.armature;
        }
        m
    }

    /// Generalized gravity plus velocity-product force,
    /// `Σ m Jᵀ (g − J̇ q̇)`, i.e. everything except actuation, passive joint
    /// torques and contact.
    pub fn free_force(&self, model: &RobotModel, gravity: f64) -> GenVec {
        let g = Vec2::new(0.0, -gravity);
        let mut out = GenVec::zeros();
        for i in 0..N_LINKS {
            let link = &model.links[i];
            let f = (g - self.com_acc[i]) * link.mass;
            self.add_point_force(i, self.com[i], f, &mut out);
        }
        out
    }

    /// Generalized gravity force alone (zero-velocity version of
    /// [`Kinematics::free_force`]).
    pub fn gravity_force(&self, model: &RobotModel, gravity: f64) -> GenVec {
        let g = Vec2::new(0.0, -gravity);
        let mut out = GenVec::zeros();
        for i in 0..N_LINKS {
            self.add_point_force(i, self.com[i], g * model.links[i].mass, &mut out);
        }
        out
    }

    /// Accumulates `Jᵀ F` for a world-frame force applied at point `p` on `link`.
    pub fn add_point_force(&self, link: usize, p: Vec2, f: Vec2, out: &mut GenVec) {
        out[0] += f.x;
        out[1] += f.y;
        out[2] += cross(p - self.origin[0], f);
        for &j in CHAIN[link] {
            out[N_BASE + j] += cross(p - self.origin[j + 1], f);
        }
    }

    /// Linear Jacobian of point `p` on `link`, as a 2×9 row pair.
    pub fn point_jacobian(&self, link: usize, p: Vec2) -> [[f64; super::N_DOF]; 2] {
        let mut jac = [[0.0; super::N_DOF]; 2];
        let mut cols = [0usize; 6];
        let mut jv = [Vec2::zeros(); 6];
        let n = self.link_columns(link, p, &mut cols, &mut jv);
        for a in 0..n {
            jac[0][cols[a]] = jv[a].x;
            jac[1][cols[a]] = jv[a].y;
        }
        jac
    }

    pub fn kinetic_energy(&self, model: &RobotModel) -> f64 {
        (0..N_LINKS)
            .map(|i| {
                let l = &model.links[i];
                0.5 * l.mass * self.com_vel[i].norm_squared() + 0.5 * l.inertia * self.omega[i].powi(2)
            })
            .sum()
    }

    pub fn potential_energy(&self, model: &RobotModel, gravity: f64) -> f64 {
        (0..N_LINKS).map(|i| model.links[i].mass * gravity * self.com[i].y).sum()
    }

    pub fn total_com(&self, model: &RobotModel) -> Vec2 {
        let mut acc = Vec2::zeros();
        for i in 0..N_LINKS {
            acc += self.com[i] * model.links[i].mass;
        }
        acc / model.total_mass()
    }

    fn link_columns(&self, link: usize, p: Vec2, cols: &mut [usize; 6], jv: &mut [Vec2; 6]) -> usize {
        cols[0] = 0;
        jv[0] = Vec2::new(1.0, 0.0);
        cols[1] = 1;
        jv[1] = Vec2::new(0.0, 1.0);
        cols[2] = 2;
        jv[2] = perp(p - self.origin[0]);
        let mut n = 3;
        for &j in CHAIN[link] {
            cols[n] = N_BASE + j;
            jv[n] = perp(p - self.origin[j + 1]);
            n += 1;
        }
        debug_assert!(n <= 3 + N_JOINTS / 2);
        n
    }
}
