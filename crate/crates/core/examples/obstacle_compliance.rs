//! Walks a policy over flat ground and over a 5 cm box and compares the peak
//! ankle command and foot reaction while crossing it. Without a checkpoint a
//! freshly initialized policy is used, which mostly shows the plumbing.
//!
//! cargo run --release --example obstacle_compliance -- [policy.bin] [position|torque]

use tbrl::dynamics::Terrain;
use tbrl::env::ActionMode;
use tbrl::harness::{fresh_policy, load_policy, EpisodeSetup, Evaluator, Rollout, RunConfig};

/// Peak |ankle command| and peak normal force while the base is within
/// 0.4-1.1 m, i.e. around the box.
fn peaks(r: &Rollout, steps_per_action: usize) -> (f64, f64) {
    let (mut cmd, mut force): (f64, f64) = (0.0, 0.0);
    for (k, row) in r.trace.iter().enumerate() {
        let x = r.base_x[(k / steps_per_action).min(r.base_x.len() - 1)];
        if (0.4..=1.1).contains(&x) {
            cmd = cmd.max(row.command[2].abs()).max(row.command[5].abs());
            force = force.max(row.force[0][1]).max(row.force[1][1]);
        }
    }
    (cmd, force)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next();
    let mode: ActionMode = args.next().map(|s| s.parse().expect("mode")).unwrap_or(ActionMode::Torque);
    let cfg = RunConfig { mode, ..RunConfig::default() };
    let policy = match &path {
        Some(p) => load_policy(p.as_ref()).expect("policy"),
        None => fresh_policy(&cfg.env(), 0).expect("policy"),
    };
    let steps_per_action = (1.0 / (cfg.freq * cfg.inner_dt)).round() as usize;
    let mut ev = Evaluator::new(cfg.env(), None).expect("evaluator");
    let mut rows = Vec::new();
    for (name, terrain) in [("flat", Terrain::Flat), ("obstacle", Terrain::standard_obstacle())] {
        let setup = EpisodeSetup { v_cmd: Some(cfg.obstacle_v_cmd), terrain: Some(terrain), record_trace: true, ..Default::default() };
        let r = ev.run(&policy, 0, &setup).expect("rollout");
        let (cmd, force) = peaks(&r, steps_per_action);
        println!(
            "{name:>8}: reached x = {:.2} m ({:?}), peak ankle command {cmd:.1} N m, peak normal force {force:.0} N",
            r.record.distance, r.record.termination
        );
        rows.push(cmd);
    }
    if rows[0] > 0.0 {
        println!("obstacle / flat peak ankle command: {:.2}", rows[1] / rows[0]);
    }
}
