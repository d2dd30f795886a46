//! Runs a policy under random dynamics scales and reports which scales
//! explain the failures via PCA on the failed episodes.
//!
//! cargo run --release --example robustness_pca -- [policy.bin] [position|torque] [episodes]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tbrl::env::{ActionMode, RandomizationRanges, RandomizationSpec, SampleMode, CATEGORY_NAMES};
use tbrl::harness::{fresh_policy, load_policy, pca, EpisodeSetup, Evaluator, RunConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().filter(|p| p != "-");
    let mode: ActionMode = args.next().map(|s| s.parse().expect("mode")).unwrap_or(ActionMode::Torque);
    let episodes: usize = args.next().map(|s| s.parse().expect("episodes")).unwrap_or(100);
    let cfg = RunConfig { mode, ..RunConfig::default() };
    let policy = match &path {
        Some(p) => load_policy(p.as_ref()).expect("policy"),
        None => fresh_policy(&cfg.env(), 0).expect("policy"),
    };
    let ranges = RandomizationRanges::uniform(cfg.robustness_low, cfg.robustness_high);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ev = Evaluator::new(cfg.env(), None).expect("evaluator");

    let mut failures = Vec::new();
    let mut survivor_returns = Vec::new();
    for k in 0..episodes {
        let spec = RandomizationSpec::sample(&mut rng, &ranges, SampleMode::PerCategory, true);
        let setup = EpisodeSetup { randomization: Some(spec.clone()), ..Default::default() };
        let r = ev.run(&policy, k as u64, &setup).expect("rollout");
        if r.record.termination.is_failure() {
            failures.push(spec.category_scales().to_vec());
        } else {
            survivor_returns.push(r.record.ret);
        }
    }
    let mean = survivor_returns.iter().sum::<f64>() / survivor_returns.len().max(1) as f64;
    println!("{mode}: {} of {episodes} episodes survived (mean reward {mean:.1})", survivor_returns.len());
    match pca(&failures) {
        Ok(p) => {
            println!("first failure axis ({:.0}% of variance):", 100.0 * p.explained_ratio()[0]);
            for (name, w) in CATEGORY_NAMES.iter().zip(p.first_axis()) {
                println!("  {name:<15} {w:+.3}");
            }
        }
        Err(e) => println!("no PCA: {e}"),
    }
}
