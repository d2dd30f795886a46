//! Drops the robot from a few centimetres above flat ground with the motors
//! off and prints base height, foot reactions and mechanical energy.
//!
//! cargo run --release --example simulate_drop -- [drop height m] [robot A|B]

use tbrl::dynamics::{settle_on_ground, Simulator, DEFAULT_INNER_DT, N_JOINTS};
use tbrl::robots::{make_robot, RobotVariant};

fn main() {
    let mut args = std::env::args().skip(1);
    let drop: f64 = args.next().map(|s| s.parse().expect("height")).unwrap_or(0.05);
    let robot: RobotVariant = args.next().map(|s| s.parse().expect("robot")).unwrap_or(RobotVariant::A);
    let model = make_robot(robot);
    let sim = Simulator::new(model.clone());
    let mut state = settle_on_ground(&sim, &model.default_pose, 0.0).expect("settle");
    let stance_z = state.base_z();
    state.q[1] += drop;
    sim.refresh_contact(&mut state);

    println!("robot {robot}: stance height {stance_z:.3} m, dropped from +{drop:.3} m");
    println!("{:>6} {:>8} {:>8} {:>9} {:>9} {:>10}", "t", "z", "pitch", "Fz right", "Fz left", "energy");
    let steps_per_print = (0.05 / DEFAULT_INNER_DT).round() as usize;
    for k in 0..=(1.5 / DEFAULT_INNER_DT).round() as usize {
        if k % steps_per_print == 0 {
            println!(
                "{:>6.2} {:>8.4} {:>8.4} {:>9.1} {:>9.1} {:>10.3}",
                state.time,
                state.base_z(),
                state.pitch(),
                state.contact_force[0][1],
                state.contact_force[1][1],
                sim.mechanical_energy(&state)
            );
        }
        if let Err(e) = sim.step_inner(&mut state, &[0.0; N_JOINTS], DEFAULT_INNER_DT) {
            println!("simulation stopped: {e}");
            break;
        }
        if sim.non_foot_ground_contact(&state) {
            println!("{:.2} s: a body other than the feet touched the ground", state.time);
            break;
        }
    }
}
