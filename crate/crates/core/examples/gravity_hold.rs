//! Holds the default stance with the gravity-compensation torques from the
//! contact-aware oracle, then shows the same robot with zero torque.
//!
//! cargo run --release --example gravity_hold -- [seconds] [robot A|B]

use tbrl::dynamics::{gravity_oracle, settle_on_ground, SimState, Simulator, DEFAULT_INNER_DT, N_JOINTS};
use tbrl::robots::{make_robot, RobotVariant};

fn max_drift(a: &SimState, b: &[f64; N_JOINTS]) -> f64 {
    a.joints().iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let seconds: f64 = args.next().map(|s| s.parse().expect("seconds")).unwrap_or(3.0);
    let robot: RobotVariant = args.next().map(|s| s.parse().expect("robot")).unwrap_or(RobotVariant::A);
    let model = make_robot(robot);
    let sim = Simulator::new(model.clone());
    let start = settle_on_ground(&sim, &model.default_pose, 0.0).expect("settle");
    let q0 = start.joints();
    let steps = (seconds / DEFAULT_INNER_DT).round() as usize;
    let every = (0.5 / DEFAULT_INNER_DT).round() as usize;

    let tau = gravity_oracle(&sim, &start, start.contact).expect("oracle");
    println!("robot {robot}, stance torques (N m): {:?}", tau.map(|t| (t * 100.0).round() / 100.0));

    for (name, compensate) in [("gravity compensation", true), ("zero torque", false)] {
        println!("{name}:");
        let mut s = start.clone();
        for k in 1..=steps {
            let tau = if compensate { gravity_oracle(&sim, &s, s.contact).expect("oracle") } else { [0.0; N_JOINTS] };
            if sim.step_inner(&mut s, &tau, DEFAULT_INNER_DT).is_err() || sim.non_foot_ground_contact(&s) {
                println!("  fell at {:.2} s", s.time);
                break;
            }
            if k % every == 0 {
                println!("  {:>4.1} s  base z {:.4} m  pitch {:+.4}  max joint drift {:.2e} rad", s.time, s.base_z(), s.pitch(), max_drift(&s, &q0));
            }
        }
    }
}
