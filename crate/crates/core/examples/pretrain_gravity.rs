//! Collects gravity-compensation data, fits a torque policy to it and
//! checks how long the deterministic policy keeps the robot standing,
//! next to a freshly initialized policy.
//!
//! cargo run --release --example pretrain_gravity -- [samples] [seed] [out.bin]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tbrl::env::{ActionMode, BipedEnv, EnvConfig, Environment};
use tbrl::nets::{standard_dims, GaussianPolicy, Mlp};
use tbrl::pretrain::{collect_pretrain_data, pretrain, CollectConfig, RegressConfig};

/// Seconds until the episode ends (capped at `limit`) and the largest |pitch|.
fn stand(policy: &GaussianPolicy, seed: u64, limit: f64) -> (f64, f64) {
    let cfg = EnvConfig { mode: ActionMode::Torque, v_cmd: Some(0.0), init_noise: 0.0, ..EnvConfig::default() };
    let mut env = BipedEnv::new(cfg).expect("env");
    env.seed(seed);
    let mut obs = env.reset();
    let mut max_pitch: f64 = 0.0;
    while env.time() < limit {
        let a = policy.mean_action(&obs).expect("action");
        let s = env.step(&a);
        max_pitch = max_pitch.max(env.state().pitch().abs());
        if s.done.is_done() {
            break;
        }
        obs = s.obs;
    }
    (env.time(), max_pitch)
}

fn main() {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let samples: usize = args.next().map(|s| s.parse().expect("samples")).unwrap_or(200_000);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let out = args.next();

    let env = EnvConfig { mode: ActionMode::Torque, ..EnvConfig::default() };
    let t0 = std::time::Instant::now();
    let data = collect_pretrain_data(&CollectConfig { samples, seed, ..CollectConfig::default() }, &env).expect("collect");
    let (single, double) = data.support_fractions();
    println!("collected {} rows in {:.1}s (single support {:.0}%, double {:.0}%)", data.len(), t0.elapsed().as_secs_f64(), single * 100.0, double * 100.0);

    let t1 = std::time::Instant::now();
    let (ckpt, report) = pretrain(&env, &data, &RegressConfig { seed, ..RegressConfig::default() }).expect("pretrain");
    println!(
        "fit in {:.1}s, {} steps ({:?}); held-out torque MSE {:.2}% of mean squared target",
        t1.elapsed().as_secs_f64(),
        report.steps,
        report.stop,
        100.0 * report.relative_torque_error()
    );
    for e in report.evals.iter().rev().take(3) {
        println!("  step {}: train MSE {:.3e}, validation MSE {:.3e}", e.step, e.train_mse, e.val_mse);
    }
    if let Some(path) = out {
        ckpt.save(&path).expect("save");
        println!("saved {path}");
    }

    let trained = ckpt.policy().expect("policy");
    let probe = BipedEnv::new(env.clone()).expect("env");
    let fresh = GaussianPolicy::new(
        Mlp::init(&standard_dims(probe.obs_dim(), probe.act_dim()), 0.01, &mut ChaCha8Rng::seed_from_u64(1)),
        probe.action_std(),
    )
    .expect("policy");
    for seed in 0..5 {
        let (tp, pp) = stand(&trained, seed, 10.0);
        let (tf, pf) = stand(&fresh, seed, 10.0);
        println!("seed {seed}: pre-trained {tp:.2}s (max |pitch| {pp:.3})   fresh {tf:.2}s (max |pitch| {pf:.3})");
    }
}
