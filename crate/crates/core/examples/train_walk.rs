//! Trains one walking (or squatting) policy and saves the final checkpoint.
//! Any config key can be given as `key=value`.
//!
//! cargo run --release --example train_walk -- mode=torque total_samples=2000000 out_dir=runs

use tbrl::harness::{create_run_dir, train_cell, Cell, RunConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = RunConfig { total_samples: 200_000, ..RunConfig::default() };
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments are key=value");
        cfg.set(k, v).unwrap_or_else(|e| panic!("{e}"));
    }
    let dir = create_run_dir(&cfg.out_dir, &format!("walk-{}-{}", cfg.mode, cfg.task)).expect("run dir");
    let result = train_cell(&Cell::new("run", cfg.clone()), &dir);
    for row in result.curve.iter().step_by((result.curve.len() / 20).max(1)) {
        println!("{:>9} samples  episode reward {:>7.1}  step reward {:.3}", row.samples, row.mean_episode_reward, row.mean_step_reward);
    }
    match (&result.error, &result.policy) {
        (Some(e), _) => println!("training stopped: {e}"),
        (None, Some(p)) => println!("final reward {:.1}; policy {}", result.final_reward, p.display()),
        (None, None) => println!("final reward {:.1}", result.final_reward),
    }
}
