//! Training jobs shared by the subcommands and the experiment recipes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{stats, HarnessError, RunConfig};
use crate::env::{ActionMode, BipedEnv, Environment, Task};
use crate::nets::{Checkpoint, GaussianPolicy};
use crate::ppo::{CurveRow, Trainer};
use crate::robots::{make_robot, RobotVariant};

/// One training run of a sweep.
#[derive(Debug, Clone)]
pub struct Cell {
    pub label: String,
    pub run: RunConfig,
    /// Use this robot's nominal PD gains instead of the trained robot's own.
    pub gains_from: Option<RobotVariant>,
    /// Initial policy checkpoint.
    pub init: Option<PathBuf>,
}

impl Cell {
    pub fn new(label: impl Into<String>, run: RunConfig) -> Self {
        Cell { label: label.into(), run, gains_from: None, init: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub label: String,
    pub task: Task,
    pub robot: RobotVariant,
    pub gains_from: RobotVariant,
    pub mode: ActionMode,
    pub s_p: f64,
    pub s_q: f64,
    pub s_tau: f64,
    pub freq: f64,
    pub seed: u64,
    pub samples: u64,
    pub pretrained: bool,
    /// Mean episode reward over the last 10% of the budget.
    pub final_reward: f64,
    /// Mean per-step reward over the last 10% of the budget.
    pub final_step_reward: f64,
    /// Mean episode reward over the first 20% of the budget.
    pub early_reward: f64,
    pub dir: PathBuf,
    pub policy: Option<PathBuf>,
    pub error: Option<String>,
    #[serde(skip)]
    pub curve: Vec<CurveRow>,
}

/// `n_envs` biped environments for `run`, optionally with another robot's
/// nominal gains.
pub fn make_envs(run: &RunConfig, gains_from: Option<RobotVariant>) -> Result<Vec<Box<dyn Environment>>, HarnessError> {
    let cfg = run.env();
    let mut model = make_robot(run.robot);
    if let Some(src) = gains_from {
        model.pd_gains = Some(make_robot(src).gains());
    }
    (0..run.n_envs.max(1))
        .map(|_| {
            BipedEnv::with_model(cfg.clone(), model.clone())
                .map(|e| Box::new(e) as Box<dyn Environment>)
                .map_err(|e| HarnessError::Run(e.to_string()))
        })
        .collect()
}

fn mean_step_reward_after(curve: &[CurveRow], start: u64) -> f64 {
    let v: Vec<f64> = curve.iter().filter(|r| r.samples >= start).map(|r| r.mean_step_reward).collect();
    stats::mean(&v)
}

/// Trains one cell into `dir`, recording failures instead of returning them.
pub fn train_cell(cell: &Cell, dir: &Path) -> CellResult {
    let run = &cell.run;
    let mut result = CellResult {
        label: cell.label.clone(),
        task: run.task,
        robot: run.robot,
        gains_from: cell.gains_from.unwrap_or(run.robot),
        mode: run.mode,
        s_p: run.s_p,
        s_q: run.s_q,
        s_tau: run.s_tau,
        freq: run.freq,
        seed: run.seed,
        samples: 0,
        pretrained: cell.init.is_some(),
        final_reward: f64::NAN,
        final_step_reward: f64::NAN,
        early_reward: f64::NAN,
        dir: dir.to_path_buf(),
        policy: None,
        error: None,
        curve: Vec::new(),
    };
    let outcome = (|| -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.toml"), run.to_toml())?;
        let envs = make_envs(run, cell.gains_from)?;
        let init = match &cell.init {
            Some(p) => Some(load_policy(p)?),
            None => None,
        };
        let mut trainer = Trainer::new(run.ppo(), envs, init)?;
        let summary = trainer.train(Some(dir))?;
        result.samples = summary.samples;
        result.policy = summary.final_policy;
        result.curve = trainer.curve().to_vec();
        if let Some(why) = summary.aborted {
            result.error = Some(why);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("cell {} failed: {e}", cell.label);
        result.error = Some(e.to_string());
    }
    let budget = run.total_samples;
    result.final_reward = stats::final_reward(&result.curve, budget, 0.1);
    result.early_reward = stats::reward_at_fraction(&result.curve, budget, 0.2);
    result.final_step_reward = mean_step_reward_after(&result.curve, (budget as f64 * 0.9) as u64);
    log::info!("cell {} final reward {:.2}", cell.label, result.final_reward);
    result
}

/// Trains every cell, `jobs` at a time, each in its own subdirectory.
pub fn train_cells(cells: &[Cell], dir: &Path, jobs: usize) -> Vec<CellResult> {
    let run = |c: &Cell| train_cell(c, &dir.join(&c.label));
    if jobs <= 1 {
        return cells.iter().map(run).collect();
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| cells.par_iter().map(run).collect()),
        Err(_) => cells.iter().map(run).collect(),
    }
}

pub fn load_policy(path: &Path) -> Result<GaussianPolicy, HarnessError> {
    let ckpt = Checkpoint::load(path).map_err(|e| HarnessError::Run(format!("{}: {e}", path.display())))?;
    ckpt.policy().map_err(|e| HarnessError::Run(format!("{}: {e}", path.display())))
}

/// Writes `curve` as CSV under `dir`.
pub fn write_curve(dir: &Path, name: &str, curve: &[CurveRow]) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    let f = std::fs::File::create(&path)?;
    crate::ppo::write_curve_csv(curve, std::io::BufWriter::new(f))?;
    Ok(path)
}
