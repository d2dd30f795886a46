//! Experiment recipes. Each one trains what it needs, evaluates, writes its
//! CSV tables into a fresh run directory and returns the filled report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{
    create_run_dir, load_policy, pca, stats, train_cells, Cell, CellResult, EpisodeSetup, Evaluator,
    ExperimentReport, HarnessError, RunConfig,
};
use crate::dynamics::{Terrain, TraceRow};
use crate::env::{
    ActionMode, BipedEnv, EnvConfig, EpisodeRecord, Environment, RandomizationRanges, RandomizationSpec, SampleMode,
    Task, TerrainKind, CATEGORY_NAMES,
};
use crate::nets::{standard_dims, GaussianPolicy, Mlp};
use crate::robots::RobotVariant;

/// Experiment ids accepted by [`run_experiment`], with a short description.
pub const EXPERIMENT_IDS: &[(&str, &str)] = &[
    ("1", "PD gain x action std sweep on walking, plus the torque companion sweep"),
    ("2", "the same sweeps on squatting and walking"),
    ("3", "gains verified on one robot applied to the other"),
    ("4", "1 cm obstacle: peak ankle command and pass/fail"),
    ("5", "25 commanded velocities per policy"),
    ("6", "uneven terrain, zero-shot and fine-tuned"),
    ("7", "post-hoc dynamics randomization, failure PCA"),
    ("freq", "torque-mode walking at several control frequencies"),
    ("pretrain", "gravity-compensation pre-training vs training from scratch"),
];

/// Already trained flat-ground walking policies. Missing sets are trained
/// with `headline_samples`.
#[derive(Debug, Clone, Default)]
pub struct PolicySet {
    pub position: Vec<PathBuf>,
    pub torque: Vec<PathBuf>,
    /// A single policy for the configured mode; experiments that evaluate
    /// one policy use only this.
    pub single: Option<PathBuf>,
}

/// Runs experiment `id` into a new directory under `cfg.out_dir` and writes
/// its report.
pub fn run_experiment(id: &str, cfg: &RunConfig, policies: &PolicySet) -> Result<ExperimentReport, HarnessError> {
    let name = EXPERIMENT_IDS
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, d)| *d)
        .ok_or_else(|| {
            let ids: Vec<&str> = EXPERIMENT_IDS.iter().map(|(k, _)| *k).collect();
            HarnessError::Usage(format!("unknown experiment `{id}` (expected one of {})", ids.join(", ")))
        })?;
    let dir = create_run_dir(&cfg.out_dir, &format!("exp{id}"))?;
    log::info!("experiment {id} writing to {}", dir.display());
    let mut report = ExperimentReport::new(id, name, cfg, &dir);
    report.seeds = seeds(cfg);
    match id {
        "1" => gain_noise_sweep(cfg, &mut report)?,
        "2" => cross_task(cfg, &mut report)?,
        "3" => cross_robot(cfg, &mut report)?,
        "4" => obstacle(cfg, policies, &mut report)?,
        "5" => velocity_sweep(cfg, policies, &mut report)?,
        "6" => uneven_terrain(cfg, policies, &mut report)?,
        "7" => robustness(cfg, policies, &mut report)?,
        "freq" => frequency(cfg, &mut report)?,
        "pretrain" => pretraining(cfg, &mut report)?,
        _ => unreachable!(),
    }
    report.write()?;
    Ok(report)
}

fn seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.seeds.max(1) as u64).map(|k| cfg.seed + k).collect()
}

fn variant(cfg: &RunConfig, task: Task, robot: RobotVariant, mode: ActionMode, seed: u64, samples: u64) -> RunConfig {
    RunConfig { task, robot, mode, seed, total_samples: samples, ..cfg.clone() }
}

/// Position grid (`sweep_s_p` x `sweep_s_q`) for every seed.
fn position_grid(cfg: &RunConfig, task: Task, robot: RobotVariant, gains_from: RobotVariant) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &seed in &seeds(cfg) {
        for &s_p in &cfg.sweep_s_p {
            for &s_q in &cfg.sweep_s_q {
                let mut run = variant(cfg, task, robot, ActionMode::Position, seed, cfg.sweep_samples);
                run.s_p = s_p;
                run.s_q = s_q;
                let mut cell = Cell::new(format!("{task}-{robot}-gains{gains_from}-sp{s_p}-sq{s_q}-seed{seed}"), run);
                cell.gains_from = (gains_from != robot).then_some(gains_from);
                cells.push(cell);
            }
        }
    }
    cells
}

fn torque_grid(cfg: &RunConfig, task: Task, robot: RobotVariant) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &seed in &seeds(cfg) {
        for &s_tau in &cfg.sweep_s_tau {
            let mut run = variant(cfg, task, robot, ActionMode::Torque, seed, cfg.sweep_samples);
            run.s_tau = s_tau;
            cells.push(Cell::new(format!("{task}-{robot}-torque-stau{s_tau}-seed{seed}"), run));
        }
    }
    cells
}

/// Seed-averaged result of one sweep cell.
#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub task: Task,
    pub robot: RobotVariant,
    pub gains_from: RobotVariant,
    pub mode: ActionMode,
    pub s_p: f64,
    pub s_q: f64,
    pub s_tau: f64,
    pub seeds: usize,
    pub failed_runs: usize,
    pub mean_final: f64,
    pub best_seed_final: f64,
    /// `mean_final` over the best cell of the same task and robot.
    pub fraction_of_best: f64,
    pub success: bool,
}

impl GridRow {
    fn setting(&self) -> String {
        match self.mode {
            ActionMode::Position => format!("sp{}/sq{}", self.s_p, self.s_q),
            ActionMode::Torque => format!("stau{}", self.s_tau),
        }
    }
}

/// Averages cells over seeds. Success compares each cell with the best cell
/// of the same task and robot, pooled over both action spaces and gain sources.
fn aggregate(results: &[CellResult], success_fraction: f64) -> Vec<GridRow> {
    let mut groups: BTreeMap<String, Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        let key = match r.mode {
            ActionMode::Position => format!("{}|{}|{}|p|{}|{}", r.task, r.robot, r.gains_from, r.s_p, r.s_q),
            ActionMode::Torque => format!("{}|{}|{}|t|{}", r.task, r.robot, r.robot, r.s_tau),
        };
        groups.entry(key).or_default().push(r);
    }
    let mut rows: Vec<GridRow> = groups
        .into_values()
        .map(|g| {
            let finals: Vec<f64> = g.iter().map(|r| r.final_reward).filter(|v| v.is_finite()).collect();
            let first = g[0];
            GridRow {
                task: first.task,
                robot: first.robot,
                gains_from: first.gains_from,
                mode: first.mode,
                s_p: first.s_p,
                s_q: first.s_q,
                s_tau: first.s_tau,
                seeds: g.len(),
                failed_runs: g.iter().filter(|r| r.error.is_some()).count(),
                mean_final: stats::mean(&finals),
                best_seed_final: finals.iter().copied().fold(f64::NAN, f64::max),
                fraction_of_best: f64::NAN,
                success: false,
            }
        })
        .collect();
    let mut best: BTreeMap<(String, RobotVariant), f64> = BTreeMap::new();
    for r in &rows {
        let b = best.entry((r.task.to_string(), r.robot)).or_insert(f64::NEG_INFINITY);
        if r.mean_final.is_finite() {
            *b = b.max(r.mean_final);
        }
    }
    for r in &mut rows {
        let b = best[&(r.task.to_string(), r.robot)];
        r.fraction_of_best = r.mean_final / b;
        r.success = r.mean_final.is_finite() && b.is_finite() && r.mean_final >= success_fraction * b;
    }
    rows
}

fn success_set(rows: &[GridRow], task: Task, robot: RobotVariant, gains_from: RobotVariant) -> Vec<String> {
    rows.iter()
        .filter(|r| r.mode == ActionMode::Position && r.task == task && r.robot == robot && r.gains_from == gains_from)
        .filter(|r| r.success)
        .map(GridRow::setting)
        .collect()
}

fn all_torque_succeed(rows: &[GridRow], task: Task, robot: RobotVariant) -> bool {
    let t: Vec<&GridRow> = rows.iter().filter(|r| r.mode == ActionMode::Torque && r.task == task && r.robot == robot).collect();
    !t.is_empty() && t.iter().all(|r| r.success)
}

fn train_and_tabulate(cfg: &RunConfig, cells: Vec<Cell>, report: &mut ExperimentReport) -> Result<Vec<GridRow>, HarnessError> {
    let results = train_cells(&cells, &report.dir().join("cells"), cfg.parallel_jobs);
    let rows = aggregate(&results, cfg.success_fraction);
    report.add_cells(results);
    report.write_csv("grid.csv", &rows)?;
    for r in &rows {
        report.add_row(r);
    }
    Ok(rows)
}

fn gain_noise_sweep(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let robot = cfg.robot;
    let mut cells = position_grid(cfg, Task::Walk, robot, robot);
    cells.extend(torque_grid(cfg, Task::Walk, robot));
    let rows = train_and_tabulate(cfg, cells, report)?;

    let position: Vec<&GridRow> = rows.iter().filter(|r| r.mode == ActionMode::Position).collect();
    let best = position.iter().map(|r| r.mean_final).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let high_gain = cfg.sweep_s_p.iter().copied().fold(f64::INFINITY, f64::min);
    let high_row_best = position
        .iter()
        .filter(|r| r.s_p == high_gain)
        .map(|r| r.mean_final)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let lower_success = position.iter().any(|r| r.s_p > high_gain && r.mean_final >= cfg.success_fraction * best);
    report.set("position_best", best);
    report.set("high_gain_s_p", high_gain);
    report.set("high_gain_row_best", high_row_best);
    report.set("high_gain_fraction", high_row_best / best);
    report.set("lower_gain_success", lower_success);
    report.set("torque_all_succeed", all_torque_succeed(&rows, Task::Walk, robot));
    report.set("position_success_set", success_set(&rows, Task::Walk, robot, robot));
    Ok(())
}

fn cross_task(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let robot = cfg.robot;
    let mut cells = Vec::new();
    for task in [Task::Squat, Task::Walk] {
        cells.extend(position_grid(cfg, task, robot, robot));
        cells.extend(torque_grid(cfg, task, robot));
    }
    let rows = train_and_tabulate(cfg, cells, report)?;
    let squat = success_set(&rows, Task::Squat, robot, robot);
    let walk = success_set(&rows, Task::Walk, robot, robot);
    report.set("torque_succeeds_squat", all_torque_succeed(&rows, Task::Squat, robot));
    report.set("torque_succeeds_walk", all_torque_succeed(&rows, Task::Walk, robot));
    report.set("position_success_squat", &squat);
    report.set("position_success_walk", &walk);
    report.set("position_sets_differ", squat != walk);
    Ok(())
}

fn other(robot: RobotVariant) -> RobotVariant {
    match robot {
        RobotVariant::A => RobotVariant::B,
        RobotVariant::B => RobotVariant::A,
    }
}

/// Robot B trained with robot A's gains on both tasks, robot A with B's
/// gains on walking, and torque mode with unchanged settings.
fn cross_robot(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let home = cfg.robot;
    let away = other(home);
    let mut cells = Vec::new();
    for task in [Task::Squat, Task::Walk] {
        cells.extend(position_grid(cfg, task, away, home));
        cells.extend(torque_grid(cfg, task, away));
    }
    cells.extend(position_grid(cfg, Task::Walk, home, away));
    cells.extend(torque_grid(cfg, Task::Walk, home));
    let rows = train_and_tabulate(cfg, cells, report)?;
    for task in [Task::Squat, Task::Walk] {
        report.set(&format!("torque_succeeds_{task}_{away}"), all_torque_succeed(&rows, task, away));
        report.set(&format!("position_success_{task}_{away}_gains{home}"), success_set(&rows, task, away, home));
    }
    report.set(&format!("torque_succeeds_walk_{home}"), all_torque_succeed(&rows, Task::Walk, home));
    report.set(&format!("position_success_walk_{home}_gains{away}"), success_set(&rows, Task::Walk, home, away));
    Ok(())
}

/// Trains one flat-ground walking policy per seed and action space with
/// `headline_samples`, under `dir`.
pub fn train_headline_policies(cfg: &RunConfig, dir: &std::path::Path) -> Result<(PolicySet, Vec<CellResult>), HarnessError> {
    let mut set = PolicySet::default();
    let mut all = Vec::new();
    for mode in [ActionMode::Position, ActionMode::Torque] {
        let results = train_cells(&headline_cells(cfg, mode), dir, cfg.parallel_jobs);
        for r in &results {
            let path = r.policy.clone().ok_or_else(|| {
                HarnessError::Run(format!("headline training {} failed: {}", r.label, r.error.as_deref().unwrap_or("no policy")))
            })?;
            match mode {
                ActionMode::Position => set.position.push(path),
                ActionMode::Torque => set.torque.push(path),
            }
        }
        all.extend(results);
    }
    Ok((set, all))
}

fn headline_cells(cfg: &RunConfig, mode: ActionMode) -> Vec<Cell> {
    seeds(cfg)
        .into_iter()
        .map(|seed| {
            let mut run = variant(cfg, Task::Walk, cfg.robot, mode, seed, cfg.headline_samples);
            run.s_p = cfg.position_s_p;
            Cell::new(format!("headline-{mode}-seed{seed}"), run)
        })
        .collect()
}

/// Loads the given policies, or trains one walking policy per seed.
fn headline(
    cfg: &RunConfig,
    mode: ActionMode,
    given: &[PathBuf],
    report: &mut ExperimentReport,
) -> Result<Vec<(u64, GaussianPolicy, PathBuf)>, HarnessError> {
    if !given.is_empty() {
        return given
            .iter()
            .enumerate()
            .map(|(k, p)| Ok((cfg.seed + k as u64, load_policy(p)?, p.clone())))
            .collect();
    }
    let results = train_cells(&headline_cells(cfg, mode), &report.dir().join("headline"), cfg.parallel_jobs);
    let mut out = Vec::new();
    for r in &results {
        let path = r.policy.clone().ok_or_else(|| {
            HarnessError::Run(format!("headline training {} failed: {}", r.label, r.error.as_deref().unwrap_or("no policy")))
        })?;
        out.push((r.seed, load_policy(&path)?, path));
    }
    report.add_cells(results);
    Ok(out)
}

/// Environment settings for evaluating a flat-ground walking policy.
fn eval_env(cfg: &RunConfig, mode: ActionMode) -> EnvConfig {
    let mut run = cfg.clone();
    run.task = Task::Walk;
    run.mode = mode;
    run.s_p = match mode {
        ActionMode::Position => cfg.position_s_p,
        ActionMode::Torque => cfg.s_p,
    };
    run.env()
}

/// Evaluates `(policy index, seed, setup)` jobs in parallel.
fn evaluate(
    env: &EnvConfig,
    policies: &[GaussianPolicy],
    jobs: &[(usize, u64, EpisodeSetup)],
) -> Result<Vec<EpisodeRecord>, HarnessError> {
    Evaluator::new(env.clone(), None)?;
    jobs.par_iter()
        .map_init(
            || Evaluator::new(env.clone(), None).expect("configuration validated above"),
            |ev, (k, seed, setup)| ev.run(&policies[*k], *seed, setup).map(|r| r.record),
        )
        .collect()
}

const ANKLES: [usize; 2] = [2, 5];

#[derive(Debug, Clone, Serialize)]
struct ObstacleRow {
    mode: ActionMode,
    seed: u64,
    flat_peak_ankle: f64,
    obstacle_peak_ankle: f64,
    ratio: f64,
    flat_peak_force: f64,
    obstacle_peak_force: f64,
    passed: bool,
    distance: f64,
}

/// Largest ankle command and foot normal force while the base is within
/// `margin` of the obstacle span.
fn obstacle_window_peaks(r: &super::Rollout, dt: f64, span: (f64, f64), margin: f64) -> (f64, f64) {
    let steps: Vec<usize> =
        (0..r.base_x.len()).filter(|&i| r.base_x[i] >= span.0 - margin && r.base_x[i] <= span.1 + margin).collect();
    let (Some(&first), Some(&last)) = (steps.first(), steps.last()) else {
        return (f64::NAN, f64::NAN);
    };
    let (t0, t1) = (first as f64 * dt, (last + 1) as f64 * dt);
    let window = r.trace.iter().filter(|row| row.time >= t0 && row.time <= t1);
    let (mut torque, mut force) = (0.0f64, 0.0f64);
    for row in window {
        for &j in &ANKLES {
            torque = torque.max(row.command[j].abs());
        }
        force = force.max(row.force[0][1].abs()).max(row.force[1][1].abs());
    }
    (torque, force)
}

fn write_trace(report: &mut ExperimentReport, name: &str, rows: &[TraceRow]) -> Result<(), HarnessError> {
    let path = report.dir().join(name);
    TraceRow::write_csv(rows, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
    report.add_artifact(&path);
    Ok(())
}

fn obstacle(cfg: &RunConfig, given: &PolicySet, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let mut sets = Vec::new();
    if let Some(p) = &given.single {
        sets.push((cfg.mode, vec![(cfg.seed, load_policy(p)?, p.clone())]));
    } else {
        for mode in [ActionMode::Position, ActionMode::Torque] {
            let paths = if mode == ActionMode::Position { &given.position } else { &given.torque };
            sets.push((mode, headline(cfg, mode, paths, report)?));
        }
    }
    let Terrain::Obstacle { start, end, .. } = Terrain::standard_obstacle() else { unreachable!() };
    let mut rows = Vec::new();
    for (mode, policies) in sets {
        let env = eval_env(cfg, mode);
        let dt = env.policy_dt();
        let mut ev = Evaluator::new(env, None)?;
        for (seed, policy, _) in &policies {
            let setup = |terrain| EpisodeSetup {
                v_cmd: Some(cfg.obstacle_v_cmd),
                terrain: Some(terrain),
                record_trace: true,
                ..EpisodeSetup::default()
            };
            let flat = ev.run(policy, *seed, &setup(Terrain::Flat))?;
            let boxed = ev.run(policy, *seed, &setup(Terrain::standard_obstacle()))?;
            write_trace(report, &format!("trace_{mode}_seed{seed}_flat.csv"), &flat.trace)?;
            write_trace(report, &format!("trace_{mode}_seed{seed}_obstacle.csv"), &boxed.trace)?;
            let (ft, ff) = obstacle_window_peaks(&flat, dt, (start, end), 0.2);
            let (ot, of) = obstacle_window_peaks(&boxed, dt, (start, end), 0.2);
            let distance = boxed.base_x.last().copied().unwrap_or(0.0);
            rows.push(ObstacleRow {
                mode,
                seed: *seed,
                flat_peak_ankle: ft,
                obstacle_peak_ankle: ot,
                ratio: ot / ft,
                flat_peak_force: ff,
                obstacle_peak_force: of,
                passed: !boxed.record.termination.is_failure() && distance > end,
                distance,
            });
        }
    }
    report.write_csv("obstacle.csv", &rows)?;
    for mode in [ActionMode::Position, ActionMode::Torque] {
        let mine: Vec<&ObstacleRow> = rows.iter().filter(|r| r.mode == mode).collect();
        if mine.is_empty() {
            continue;
        }
        let ratios: Vec<f64> = mine.iter().map(|r| r.ratio).collect();
        report.set(&format!("{mode}_ratio"), stats::mean(&ratios));
        report.set(&format!("{mode}_passed"), mine.iter().filter(|r| r.passed).count());
        report.set(&format!("{mode}_runs"), mine.len());
    }
    for r in &rows {
        report.add_row(r);
    }
    Ok(())
}

/// Commanded speeds of the velocity sweep: 0.02 to 0.5 m/s.
pub fn sweep_velocities() -> Vec<f64> {
    (1..=25).map(|k| 0.02 * k as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
struct VelocityRow {
    policy: String,
    mode: ActionMode,
    s_p: f64,
    seed: u64,
    v_cmd: f64,
    success: bool,
    ret: f64,
    sim_time: f64,
}

fn velocity_rows(
    cfg: &RunConfig,
    label: &str,
    mode: ActionMode,
    s_p: f64,
    seed: u64,
    policy: &GaussianPolicy,
) -> Result<Vec<VelocityRow>, HarnessError> {
    let mut env = eval_env(cfg, mode);
    env.s_p = s_p;
    let jobs: Vec<(usize, u64, EpisodeSetup)> = sweep_velocities()
        .into_iter()
        .enumerate()
        .map(|(k, v)| (0, seed + k as u64, EpisodeSetup { v_cmd: Some(v), ..EpisodeSetup::default() }))
        .collect();
    let records = evaluate(&env, std::slice::from_ref(policy), &jobs)?;
    Ok(records
        .into_iter()
        .map(|r| VelocityRow {
            policy: label.to_string(),
            mode,
            s_p,
            seed,
            v_cmd: r.v_cmd,
            success: !r.termination.is_failure(),
            ret: r.ret,
            sim_time: r.sim_time,
        })
        .collect())
}

fn velocity_sweep(cfg: &RunConfig, given: &PolicySet, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    if let Some(p) = &given.single {
        let policy = load_policy(p)?;
        let s_p = if cfg.mode == ActionMode::Position { cfg.position_s_p } else { cfg.s_p };
        let rows = velocity_rows(cfg, &p.display().to_string(), cfg.mode, s_p, cfg.seed, &policy)?;
        report.set("successes", rows.iter().filter(|r| r.success).count());
        report.write_csv("velocity.csv", &rows)?;
        return Ok(());
    }
    let cells: Vec<Cell> = cfg
        .velocity_s_p
        .iter()
        .flat_map(|&s_p| {
            seeds(cfg).into_iter().map(move |seed| {
                let mut run = variant(cfg, Task::Walk, cfg.robot, ActionMode::Position, seed, cfg.headline_samples);
                run.s_p = s_p;
                Cell::new(format!("velocity-sp{s_p}-seed{seed}"), run)
            })
        })
        .collect();
    let results = train_cells(&cells, &report.dir().join("cells"), cfg.parallel_jobs);
    let mut rows = Vec::new();
    for r in &results {
        match &r.policy {
            Some(p) => rows.extend(velocity_rows(cfg, &r.label, ActionMode::Position, r.s_p, r.seed, &load_policy(p)?)?),
            None => log::warn!("{} produced no policy; counted as 0/25", r.label),
        }
    }
    report.add_cells(results);
    let torque = headline(cfg, ActionMode::Torque, &given.torque, report)?;
    for (seed, policy, path) in &torque {
        rows.extend(velocity_rows(cfg, &path.display().to_string(), ActionMode::Torque, cfg.s_p, *seed, policy)?);
    }
    report.write_csv("velocity.csv", &rows)?;

    let n_seeds = seeds(cfg).len() as f64;
    let mut counts = Vec::new();
    for &s_p in &cfg.velocity_s_p {
        let c = rows.iter().filter(|r| r.mode == ActionMode::Position && r.s_p == s_p && r.success).count();
        counts.push(c as f64 / n_seeds);
        report.add_row(json!({ "mode": "position", "s_p": s_p, "mean_successes": c as f64 / n_seeds }));
    }
    let torque_count = rows.iter().filter(|r| r.mode == ActionMode::Torque && r.success).count() as f64 / torque.len().max(1) as f64;
    report.add_row(json!({ "mode": "torque", "mean_successes": torque_count }));
    report.set("position_successes", &counts);
    report.set("spearman", stats::spearman(&cfg.velocity_s_p, &counts));
    report.set("torque_successes", torque_count);
    Ok(())
}

fn uneven_terrain(cfg: &RunConfig, given: &PolicySet, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let mut zero_shot = BTreeMap::new();
    let mut cells = Vec::new();
    for mode in [ActionMode::Position, ActionMode::Torque] {
        let paths = if mode == ActionMode::Position { &given.position } else { &given.torque };
        let policies = headline(cfg, mode, paths, report)?;
        let mut env = eval_env(cfg, mode);
        env.terrain = TerrainKind::Uneven;
        let nets: Vec<GaussianPolicy> = policies.iter().map(|p| p.1.clone()).collect();
        let jobs: Vec<(usize, u64, EpisodeSetup)> = (0..policies.len())
            .flat_map(|k| (0..cfg.eval_episodes as u64).map(move |e| (k, 1000 * k as u64 + e, EpisodeSetup::default())))
            .collect();
        let records = evaluate(&env, &nets, &jobs)?;
        let returns: Vec<f64> = records.iter().map(|r| r.ret).collect();
        zero_shot.insert(mode, stats::mean(&returns));
        report.add_row(json!({
            "mode": mode, "phase": "zero_shot", "episodes": records.len(),
            "mean_reward": stats::mean(&returns), "falls": records.iter().filter(|r| r.termination.is_failure()).count(),
        }));
        for (seed, _, path) in &policies {
            let mut run = variant(cfg, Task::Walk, cfg.robot, mode, *seed, cfg.sweep_samples);
            run.terrain = TerrainKind::Uneven;
            if mode == ActionMode::Position {
                run.s_p = cfg.position_s_p;
            }
            let mut cell = Cell::new(format!("finetune-{mode}-seed{seed}"), run);
            cell.init = Some(path.clone());
            cells.push(cell);
        }
    }
    report.set("zero_shot_position", zero_shot[&ActionMode::Position]);
    report.set("zero_shot_torque", zero_shot[&ActionMode::Torque]);

    let results = train_cells(&cells, &report.dir().join("cells"), cfg.parallel_jobs);
    // Every run uses the same batch size, so updates share one sample axis.
    let mut axis: Vec<u64> = Vec::new();
    let mut by_mode: BTreeMap<ActionMode, Vec<Vec<f64>>> = BTreeMap::new();
    for r in &results {
        if r.curve.len() > axis.len() {
            axis = r.curve.iter().map(|c| c.samples).collect();
        }
        by_mode.entry(r.mode).or_default().push(r.curve.iter().map(|c| c.mean_episode_reward).collect());
    }
    let mean_curve = |mode: ActionMode| -> Vec<f64> {
        let runs = by_mode.get(&mode).cloned().unwrap_or_default();
        let raw: Vec<f64> = (0..axis.len())
            .map(|i| stats::mean(&runs.iter().filter_map(|c| c.get(i).copied()).collect::<Vec<_>>()))
            .collect();
        stats::smooth(&raw, 2)
    };
    let (pos, tor) = (mean_curve(ActionMode::Position), mean_curve(ActionMode::Torque));
    #[derive(Serialize)]
    struct FineTuneRow {
        samples: u64,
        position: f64,
        torque: f64,
    }
    let table: Vec<FineTuneRow> =
        axis.iter().enumerate().map(|(i, &s)| FineTuneRow { samples: s, position: pos[i], torque: tor[i] }).collect();
    report.write_csv("finetune.csv", &table)?;
    report.add_cells(results);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct RobustRow {
    episode: usize,
    mode: ActionMode,
    seed: u64,
    survived: bool,
    ret: f64,
    sim_time: f64,
    mass: f64,
    inertia: f64,
    com: f64,
    damping: f64,
    friction: f64,
    motor_constant: f64,
    delay: f64,
    leg_length: f64,
}

/// Shared histogram bins over `values`.
fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let k = if width > 0.0 { ((v - lo) / width).floor() as isize } else { 0 };
        h[k.clamp(0, bins as isize - 1) as usize] += 1;
    }
    h
}

fn robustness(cfg: &RunConfig, given: &PolicySet, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let n = cfg.robustness_episodes;
    if n < 100 {
        log::warn!("only {n} robustness episodes; the failure PCA will be unstable");
        report.set("warning", format!("{n} episodes is below 100; PCA unstable"));
    }
    let ranges = RandomizationRanges::uniform(cfg.robustness_low, cfg.robustness_high);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0007);
    // Both action spaces see the same scales and episode seeds.
    let specs: Vec<RandomizationSpec> =
        (0..n).map(|_| RandomizationSpec::sample(&mut rng, &ranges, SampleMode::PerCategory, true)).collect();

    let mut rows = Vec::new();
    for mode in [ActionMode::Position, ActionMode::Torque] {
        let paths = if mode == ActionMode::Position { &given.position } else { &given.torque };
        let policies = headline(cfg, mode, paths, report)?;
        let nets: Vec<GaussianPolicy> = policies.iter().map(|p| p.1.clone()).collect();
        let jobs: Vec<(usize, u64, EpisodeSetup)> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                (i % nets.len(), cfg.seed + i as u64, EpisodeSetup { randomization: Some(s.clone()), ..EpisodeSetup::default() })
            })
            .collect();
        let records = evaluate(&eval_env(cfg, mode), &nets, &jobs)?;
        for (i, r) in records.iter().enumerate() {
            let s = specs[i].category_scales();
            rows.push(RobustRow {
                episode: i,
                mode,
                seed: cfg.seed + i as u64,
                survived: !r.termination.is_failure(),
                ret: r.ret,
                sim_time: r.sim_time,
                mass: s[0],
                inertia: s[1],
                com: s[2],
                damping: s[3],
                friction: s[4],
                motor_constant: s[5],
                delay: s[6],
                leg_length: s[7],
            });
        }
    }
    report.write_csv("robustness_episodes.csv", &rows)?;

    let survivors = |mode: ActionMode| -> Vec<f64> { rows.iter().filter(|r| r.mode == mode && r.survived).map(|r| r.ret).collect() };
    let pooled: Vec<f64> = rows.iter().filter(|r| r.survived).map(|r| r.ret).collect();
    let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = 20;
    let hist: BTreeMap<ActionMode, Vec<usize>> =
        [ActionMode::Position, ActionMode::Torque].into_iter().map(|m| (m, histogram(&survivors(m), lo, hi, bins))).collect();
    #[derive(Serialize)]
    struct HistRow {
        bin_low: f64,
        bin_high: f64,
        position: usize,
        torque: usize,
    }
    let width = (hi - lo) / bins as f64;
    let hist_rows: Vec<HistRow> = if pooled.is_empty() {
        Vec::new()
    } else {
        (0..bins)
            .map(|k| HistRow {
                bin_low: lo + k as f64 * width,
                bin_high: lo + (k + 1) as f64 * width,
                position: hist[&ActionMode::Position][k],
                torque: hist[&ActionMode::Torque][k],
            })
            .collect()
    };
    report.write_csv("survivor_histogram.csv", &hist_rows)?;

    #[derive(Serialize)]
    struct PcaRow {
        mode: ActionMode,
        component: usize,
        variance: f64,
        explained: f64,
        mass: f64,
        inertia: f64,
        com: f64,
        damping: f64,
        friction: f64,
        motor_constant: f64,
        delay: f64,
        leg_length: f64,
    }
    let mut pca_rows = Vec::new();
    for mode in [ActionMode::Position, ActionMode::Torque] {
        let s = survivors(mode);
        report.set(&format!("survivals_{mode}"), s.len());
        report.set(&format!("survivor_mean_{mode}"), stats::mean(&s));
        report.set(&format!("survivor_std_{mode}"), stats::std_dev(&s));
        let failures: Vec<Vec<f64>> = rows
            .iter()
            .filter(|r| r.mode == mode && !r.survived)
            .map(|r| vec![r.mass, r.inertia, r.com, r.damping, r.friction, r.motor_constant, r.delay, r.leg_length])
            .collect();
        report.set(&format!("failures_{mode}"), failures.len());
        match pca(&failures) {
            Ok(p) => {
                let explained = p.explained_ratio();
                for (c, axis) in p.axes.iter().enumerate() {
                    pca_rows.push(PcaRow {
                        mode,
                        component: c + 1,
                        variance: p.variances[c],
                        explained: explained[c],
                        mass: axis[0],
                        inertia: axis[1],
                        com: axis[2],
                        damping: axis[3],
                        friction: axis[4],
                        motor_constant: axis[5],
                        delay: axis[6],
                        leg_length: axis[7],
                    });
                }
                let loadings: BTreeMap<&str, f64> = CATEGORY_NAMES.iter().copied().zip(p.first_axis().iter().copied()).collect();
                report.set(&format!("first_axis_{mode}"), loadings);
            }
            Err(e) => log::warn!("no failure PCA for {mode}: {e}"),
        }
    }
    report.write_csv("failure_pca.csv", &pca_rows)?;
    Ok(())
}

fn frequency(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let cells: Vec<Cell> = cfg
        .frequencies
        .iter()
        .flat_map(|&f| {
            seeds(cfg).into_iter().map(move |seed| {
                let mut run = variant(cfg, Task::Walk, cfg.robot, ActionMode::Torque, seed, cfg.sweep_samples);
                run.freq = f;
                Cell::new(format!("freq{f}-seed{seed}"), run)
            })
        })
        .collect();
    let results = train_cells(&cells, &report.dir().join("cells"), cfg.parallel_jobs);
    #[derive(Serialize)]
    struct FreqRow {
        freq: f64,
        seeds: usize,
        final_step_reward: f64,
        final_episode_reward: f64,
    }
    let mut rows = Vec::new();
    for &f in &cfg.frequencies {
        let mine: Vec<&CellResult> = results.iter().filter(|r| r.freq == f).collect();
        let step: Vec<f64> = mine.iter().map(|r| r.final_step_reward).filter(|v| v.is_finite()).collect();
        let ep: Vec<f64> = mine.iter().map(|r| r.final_reward).filter(|v| v.is_finite()).collect();
        rows.push(FreqRow { freq: f, seeds: mine.len(), final_step_reward: stats::mean(&step), final_episode_reward: stats::mean(&ep) });
    }
    let step: Vec<f64> = rows.iter().map(|r| r.final_step_reward).collect();
    let hi = step.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = step.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi.abs();
    report.set("step_reward_spread", spread);
    report.set("within_10_percent", spread.is_finite() && spread <= 0.1);
    report.write_csv("frequency.csv", &rows)?;
    for r in &rows {
        report.add_row(r);
    }
    report.add_cells(results);
    Ok(())
}

/// Result of holding a standing command with a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandOutcome {
    /// Seconds until a fall or the limit.
    pub time: f64,
    pub max_pitch: f64,
    pub fell: bool,
}

/// Runs the deterministic policy on torque-mode walking at zero commanded
/// speed from the exact default pose for up to `limit` seconds.
pub fn stand_test(policy: &GaussianPolicy, run: &RunConfig, seed: u64, limit: f64) -> Result<StandOutcome, HarnessError> {
    let mut cfg = run.env();
    cfg.mode = ActionMode::Torque;
    cfg.v_cmd = Some(0.0);
    cfg.init_noise = 0.0;
    cfg.randomize = false;
    cfg.terrain = TerrainKind::Flat;
    cfg.episode_time = cfg.episode_time.max(limit);
    let mut env = BipedEnv::new(cfg).map_err(|e| HarnessError::Run(e.to_string()))?;
    env.seed(seed);
    let mut obs = env.reset();
    let mut max_pitch: f64 = 0.0;
    let mut fell = false;
    while env.time() < limit - 1e-9 {
        let a = policy.mean_action(&obs).map_err(|e| HarnessError::Run(e.to_string()))?;
        let s = env.try_step(&a).map_err(|e| HarnessError::Run(e.to_string()))?;
        max_pitch = max_pitch.max(env.state().pitch().abs());
        if s.done.is_done() {
            fell = env.last_info().and_then(|i| i.termination).is_some_and(|t| t.is_failure());
            break;
        }
        obs = s.obs;
    }
    Ok(StandOutcome { time: env.time(), max_pitch, fell })
}

/// A freshly initialized policy for `env`, as a trainer would create it.
pub fn fresh_policy(env: &EnvConfig, seed: u64) -> Result<GaussianPolicy, HarnessError> {
    let probe = BipedEnv::new(env.clone()).map_err(|e| HarnessError::Run(e.to_string()))?;
    let mean = Mlp::init(&standard_dims(probe.obs_dim(), probe.act_dim()), 0.01, &mut ChaCha8Rng::seed_from_u64(seed));
    GaussianPolicy::new(mean, probe.action_std()).map_err(|e| HarnessError::Run(e.to_string()))
}

fn pretraining(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<(), HarnessError> {
    let mut torque = cfg.clone();
    torque.mode = ActionMode::Torque;
    let env = torque.env();
    let data = crate::pretrain::collect_pretrain_data(&torque.collect(), &env)?;
    let data_path = report.dir().join("pretrain_data.bin");
    data.save(&data_path)?;
    report.add_artifact(&data_path);
    let (ckpt, fit) = crate::pretrain::pretrain(&env, &data, &torque.regress())?;
    let ckpt_path = report.dir().join("pretrained.bin");
    ckpt.save(&ckpt_path).map_err(|e| HarnessError::Run(e.to_string()))?;
    report.add_artifact(&ckpt_path);
    report.set("fit_steps", fit.steps);
    report.set("fit_relative_torque_error", fit.relative_torque_error());

    let pretrained = ckpt.policy().map_err(|e| HarnessError::Run(e.to_string()))?;
    #[derive(Serialize)]
    struct StandRow {
        trial: u64,
        policy: &'static str,
        time: f64,
        max_pitch: f64,
        fell: bool,
    }
    let mut stand = Vec::new();
    for k in 0..10 {
        let seed = cfg.seed + k;
        let fresh = fresh_policy(&env, seed)?;
        for (name, p) in [("pretrained", &pretrained), ("fresh", &fresh)] {
            let o = stand_test(p, &torque, seed, 10.0)?;
            stand.push(StandRow { trial: k, policy: name, time: o.time, max_pitch: o.max_pitch, fell: o.fell });
        }
    }
    let stood = stand.iter().filter(|r| r.policy == "pretrained" && !r.fell && r.time >= 10.0 - 1e-6).count();
    let fresh_fell = stand.iter().filter(|r| r.policy == "fresh" && r.fell && r.time < 3.0).count();
    let both = (0..10)
        .filter(|&k| {
            let row = |name: &str| stand.iter().find(|r| r.trial == k && r.policy == name);
            matches!((row("pretrained"), row("fresh")), (Some(p), Some(f))
                if !p.fell && p.time >= 10.0 - 1e-6 && f.fell && f.time < 3.0)
        })
        .count();
    report.set("stand_pretrained_10s", stood);
    report.set("stand_fresh_fell_3s", fresh_fell);
    report.set("stand_trials_both", both);
    report.write_csv("stand.csv", &stand)?;

    let mut cells = Vec::new();
    for task in [Task::Squat, Task::Walk] {
        for seed in seeds(cfg) {
            let run = variant(cfg, task, cfg.robot, ActionMode::Torque, seed, cfg.sweep_samples);
            let mut pre = Cell::new(format!("{task}-pretrained-seed{seed}"), run.clone());
            pre.init = Some(ckpt_path.clone());
            cells.push(pre);
            cells.push(Cell::new(format!("{task}-scratch-seed{seed}"), run));
        }
    }
    let results = train_cells(&cells, &report.dir().join("cells"), cfg.parallel_jobs);
    #[derive(Serialize)]
    struct EarlyRow {
        task: Task,
        seed: u64,
        pretrained_early: f64,
        scratch_early: f64,
        pretrained_final: f64,
        scratch_final: f64,
        pretrained_ahead: bool,
    }
    let mut early = Vec::new();
    for task in [Task::Squat, Task::Walk] {
        for seed in seeds(cfg) {
            let find = |pre: bool| results.iter().find(|r| r.task == task && r.seed == seed && r.pretrained == pre);
            let (Some(p), Some(s)) = (find(true), find(false)) else { continue };
            early.push(EarlyRow {
                task,
                seed,
                pretrained_early: p.early_reward,
                scratch_early: s.early_reward,
                pretrained_final: p.final_reward,
                scratch_final: s.final_reward,
                pretrained_ahead: p.early_reward >= s.early_reward,
            });
        }
        let ahead = early.iter().filter(|r| r.task == task && r.pretrained_ahead).count();
        report.set(&format!("pretrained_ahead_{task}"), ahead);
    }
    report.write_csv("early_reward.csv", &early)?;
    for r in &early {
        report.add_row(r);
    }
    report.add_cells(results);
    Ok(())
}
