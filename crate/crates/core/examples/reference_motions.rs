//! Prints the squat and walking references for a robot, or writes them as
//! CSV with `--csv`.
//!
//! cargo run --example reference_motions -- [robot A|B] [--csv]

use tbrl::robots::{make_robot, ReferenceMotion, RobotVariant};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let csv = args.iter().any(|a| a == "--csv");
    let robot: RobotVariant = args.iter().find(|a| !a.starts_with("--")).map(|s| s.parse().expect("robot")).unwrap_or(RobotVariant::A);
    let model = make_robot(robot);
    for (name, motion) in [("squat", ReferenceMotion::squat(&model)), ("walk", ReferenceMotion::walk(&model))] {
        if csv {
            print!("{}", motion.to_csv(100));
            continue;
        }
        println!("{name} (period {:.2} s)", motion.period());
        println!("  phase  {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}  contact", "hip_r", "knee_r", "ank_r", "hip_l", "knee_l", "ank_l");
        for i in 0..20 {
            let phase = i as f64 / 20.0;
            let p = motion.pose_at(phase);
            let q: Vec<String> = p.q.iter().map(|v| format!("{v:>7.3}")).collect();
            println!("  {phase:.2}   {}  {:?}", q.join(" "), motion.contact_at(phase));
        }
    }
}
