use std::io::Write;

use super::model::N_JOINTS;
use super::SimState;

/// One inner-loop sample of a simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub q: [f64; N_JOINTS],
    pub qdot: [f64; N_JOINTS],
    /// Commanded torque (PD output or policy torque) before the delay.
    pub command: [f64; N_JOINTS],
    /// Shaft torque after delay and motor-constant scaling.
    pub applied: [f64; N_JOINTS],
    /// (tangential, normal) reaction per foot, right then left.
    pub force: [[f64; 2]; 2],
}

pub const TRACE_HEADER: &str = "time,\
q0,q1,q2,q3,q4,q5,\
qd0,qd1,qd2,qd3,qd4,qd5,\
cmd0,cmd1,cmd2,cmd3,cmd4,cmd5,\
tau0,tau1,tau2,tau3,tau4,tau5,\
fx_r,fz_r,fx_l,fz_l";

impl TraceRow {
    pub fn capture(state: &SimState, command: &[f64; N_JOINTS], applied: &[f64; N_JOINTS]) -> Self {
        TraceRow {
            time: state.time,
            q: state.joints(),
            qdot: state.joint_velocities(),
            command: *command,
            applied: *applied,
            force: [
                [state.contact_force[0].x, state.contact_force[0].y],
                [state.contact_force[1].x, state.contact_force[1].y],
            ],
        }
    }

    pub fn write_csv<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in rows {
            let mut fields = vec![r.time];
            fields.extend_from_slice(&r.q);
            fields.extend_from_slice(&r.qdot);
            fields.extend_from_slice(&r.command);
            fields.extend_from_slice(&r.applied);
            fields.extend(r.force.iter().flatten());
            let line: Vec<String> = fields.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}
