mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tbrl::dynamics::Terrain;
use tbrl::env::{ActionMode, EpisodeRecord, RandomizationSpec};
use tbrl::harness::{fresh_policy, pca, EpisodeSetup, Evaluator, RunConfig};

/// Episode counters differ between evaluators; everything else must match.
fn same_episode(a: &EpisodeRecord, b: &EpisodeRecord) -> bool {
    EpisodeRecord { episode: 0, ..a.clone() } == EpisodeRecord { episode: 0, ..b.clone() }
}

fn torque_walk() -> RunConfig {
    RunConfig { mode: ActionMode::Torque, ..RunConfig::default() }
}

#[test]
fn zero_height_obstacle_matches_flat_ground() {
    let run = torque_walk();
    let policy = fresh_policy(&run.env(), 3).unwrap();
    let mut ev = Evaluator::new(run.env(), None).unwrap();
    let flat = ev.run(&policy, 5, &EpisodeSetup { terrain: Some(Terrain::Flat), record_trace: true, ..Default::default() }).unwrap();
    let box0 = Terrain::Obstacle { start: 0.6, end: 0.9, height: 0.0 };
    let zero = ev.run(&policy, 5, &EpisodeSetup { terrain: Some(box0), record_trace: true, ..Default::default() }).unwrap();
    assert!(!flat.trace.is_empty());
    assert_eq!(flat.trace, zero.trace);
    assert!(same_episode(&flat.record, &zero.record));
}

#[test]
fn evaluation_is_deterministic_per_seed() {
    let run = RunConfig { mode: ActionMode::Position, ..RunConfig::default() };
    let policy = fresh_policy(&run.env(), 1).unwrap();
    let mut spec = RandomizationSpec::identity();
    spec.mass = [1.2; 7];
    spec.delay = 1.3;
    let setup = EpisodeSetup { randomization: Some(spec.clone()), ..Default::default() };
    let mut a = Evaluator::new(run.env(), None).unwrap();
    let mut b = Evaluator::new(run.env(), None).unwrap();
    let ra = a.run(&policy, 9, &setup).unwrap();
    // An unrelated episode in between must not leak state.
    b.run(&policy, 2, &EpisodeSetup::default()).unwrap();
    let rb = b.run(&policy, 9, &setup).unwrap();
    assert!(same_episode(&ra.record, &rb.record));
    assert_eq!(ra.base_x, rb.base_x);
    assert_eq!(ra.record.scales, spec);
}

#[test]
fn failure_pca_recovers_a_shared_factor() {
    // Failures whose delay and leg length move together; the other scales are
    // independent noise.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let f: f64 = rng.random_range(-0.3..0.3);
            let mut r: Vec<f64> = (0..8).map(|_| rng.random_range(0.7..1.3)).collect();
            r[6] = 1.0 + f + rng.random_range(-0.02..0.02);
            r[7] = 1.0 - f + rng.random_range(-0.02..0.02);
            r
        })
        .collect();
    let p = pca(&rows).unwrap();
    let axis = p.first_axis();
    assert!(axis[6].abs() > 0.65 && axis[7].abs() > 0.65, "{axis:?}");
    assert!(axis[6] * axis[7] < 0.0);
    assert!(axis[..6].iter().all(|x| x.abs() < 0.2), "{axis:?}");
    assert!((axis.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    let (values, _) = common::jacobi_eigen(&common::correlation(&rows));
    assert!((p.variances[0] - values[0]).abs() < 1e-9);
    assert!(p.explained_ratio()[0] > 0.2);
}
