//! Trains PPO on the torque-limited inverted pendulum and prints the
//! learning curve.
//!
//! cargo run --release --example train_pendulum -- [seed] [samples]

use tbrl::env::Environment;
use tbrl::ppo::{PpoConfig, Pendulum, Trainer};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let samples: u64 = args.next().map(|s| s.parse().expect("samples")).unwrap_or(500_000);
    let cfg = PpoConfig { total_samples: samples, seed, ..tbrl::ppo::pendulum_config() };
    let envs: Vec<Box<dyn Environment>> = (0..cfg.n_envs).map(|_| Box::new(Pendulum::default()) as Box<dyn Environment>).collect();
    let mut trainer = Trainer::new(cfg, envs, None).expect("trainer");
    let start = std::time::Instant::now();
    while trainer.samples() < trainer.cfg.total_samples {
        let row = trainer.iterate().expect("update");
        println!(
            "{:>8} samples  step reward {:.4}  episode return {:>7.2}  kl {:.1e}",
            row.samples, row.mean_step_reward, row.mean_episode_reward, row.approx_kl
        );
    }
    println!("done in {:.1}s", start.elapsed().as_secs_f64());
}
