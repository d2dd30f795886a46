use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, PretrainError};
use crate::dynamics::N_JOINTS;
use crate::nets::{Adam, GaussianPolicy, Mlp};

/// Settings for fitting the policy mean to a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressConfig {
    pub lr: f64,
    pub minibatch: usize,
    /// Share of rows held out for validation.
    pub val_fraction: f64,
    /// Minibatch steps between validation evaluations.
    pub eval_every: usize,
    /// Plateau: the best validation MSE improved by less than `plateau_tol`
    /// (relative) over this many evaluations.
    pub plateau_evals: usize,
    pub plateau_tol: f64,
    /// On a plateau the step size is multiplied by `lr_drop_factor` this
    /// many times before training stops.
    pub lr_drops: usize,
    pub lr_drop_factor: f64,
    pub max_steps: usize,
    /// Abort once the training loss exceeds its minimum by this factor.
    pub divergence_factor: f64,
    pub seed: u64,
}

impl Default for RegressConfig {
    fn default() -> Self {
        RegressConfig {
            lr: 1e-3,
            minibatch: 256,
            val_fraction: 0.1,
            eval_every: 500,
            plateau_evals: 5,
            plateau_tol: 1e-4,
            lr_drops: 2,
            lr_drop_factor: 0.1,
            max_steps: 200_000,
            divergence_factor: 10.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalPoint {
    pub step: usize,
    pub lr: f64,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Validation MSE over the joint-torque outputs only.
    pub val_torque_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Plateau,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressReport {
    pub steps: usize,
    pub stop: StopReason,
    pub evals: Vec<EvalPoint>,
    pub train_rows: usize,
    pub val_rows: usize,
    /// Mean squared joint-torque target over the validation rows.
    pub val_torque_mean_square: f64,
}

impl RegressReport {
    pub fn last(&self) -> Option<&EvalPoint> {
        self.evals.last()
    }

    /// Validation torque MSE relative to the mean squared torque target.
    pub fn relative_torque_error(&self) -> f64 {
        self.last().map_or(f64::NAN, |e| e.val_torque_mse / self.val_torque_mean_square.max(1e-300))
    }
}

/// `(all outputs, torque outputs)` mean squared error over `rows`.
fn evaluate(net: &Mlp, data: &Dataset, rows: &[usize]) -> (f64, f64) {
    if rows.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let td = data.target_dim;
    let nt = td.min(N_JOINTS);
    let (mut all, mut torque) = (0.0, 0.0);
    for chunk in rows.chunks(4096) {
        let x: Vec<f64> = chunk.iter().flat_map(|&i| data.obs_row(i).iter().copied()).collect();
        let y = net.forward_batch(&x, chunk.len());
        for (k, &i) in chunk.iter().enumerate() {
            let t = data.target_row(i);
            for d in 0..td {
                let e = (y[k * td + d] - t[d]).powi(2);
                all += e;
                if d < nt {
                    torque += e;
                }
            }
        }
    }
    let n = rows.len() as f64;
    (all / (n * td as f64), torque / (n * nt.max(1) as f64))
}

/// Growth past `factor` times the smallest loss seen. The floor keeps
/// round-off noise around an exact fit from counting as growth.
fn is_diverging(loss: f64, min_loss: f64, factor: f64) -> bool {
    !loss.is_finite() || loss > factor * min_loss.max(1e-12)
}

/// Minibatch Adam on the mean squared error between the policy mean and
/// the dataset targets. Only the mean network changes; the action std is
/// left as it was. Stops when validation MSE plateaus at the smallest step
/// size, or after `max_steps`.
pub fn regress(policy: &mut GaussianPolicy, data: &Dataset, cfg: &RegressConfig) -> Result<RegressReport, PretrainError> {
    if data.is_empty() {
        return Err(PretrainError::EmptyDataset);
    }
    if data.obs_dim != policy.obs_dim() || data.target_dim != policy.act_dim() {
        return Err(PretrainError::Shape {
            expected: (policy.obs_dim(), policy.act_dim()),
            got: (data.obs_dim, data.target_dim),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.shuffle(&mut rng);
    let n_val = ((data.len() as f64) * cfg.val_fraction.clamp(0.0, 0.5)).floor() as usize;
    let (val, train) = rows.split_at(n_val);
    let val: Vec<usize> = if val.is_empty() { train.to_vec() } else { val.to_vec() };
    let mut train = train.to_vec();

    let nt = data.target_dim.min(N_JOINTS);
    let val_ms = val.iter().map(|&i| data.target_row(i)[..nt].iter().map(|t| t * t).sum::<f64>()).sum::<f64>()
        / (val.len() * nt.max(1)) as f64;

    let td = data.target_dim;
    let net = &mut policy.mean;
    let mut opt = Adam::new(net.params().len());
    let mut grad = vec![0.0; net.params().len()];
    let mut lr = cfg.lr;
    let mut drops = 0;
    let mut evals: Vec<EvalPoint> = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_history: Vec<f64> = Vec::new();
    let mut min_train = f64::INFINITY;
    let (mut run_loss, mut run_n) = (0.0, 0usize);
    let mut cursor = train.len();
    let mb = cfg.minibatch.max(1);
    let eval_every = cfg.eval_every.max(1);

    for step in 1..=cfg.max_steps {
        if cursor + mb > train.len() {
            train.shuffle(&mut rng);
            cursor = 0;
        }
        let batch = &train[cursor..(cursor + mb).min(train.len())];
        cursor += batch.len();
        let m = batch.len();
        let x: Vec<f64> = batch.iter().flat_map(|&i| data.obs_row(i).iter().copied()).collect();
        let tape = net.forward_tape(&x, m);
        let y = tape.output();
        let scale = 1.0 / (m * td) as f64;
        let mut loss = 0.0;
        let mut d = vec![0.0; m * td];
        for (k, &i) in batch.iter().enumerate() {
            let t = data.target_row(i);
            for j in 0..td {
                let e = y[k * td + j] - t[j];
                loss += e * e;
                d[k * td + j] = 2.0 * e * scale;
            }
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(PretrainError::Diverged { step, loss, min_loss: min_train });
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        net.backward(&tape, &d, &mut grad);
        opt.step(net.params_mut(), &grad, lr);
        run_loss += loss;
        run_n += 1;

        if step % eval_every == 0 || step == cfg.max_steps {
            let train_mse = run_loss / run_n as f64;
            (run_loss, run_n) = (0.0, 0);
            min_train = min_train.min(train_mse);
            if is_diverging(train_mse, min_train, cfg.divergence_factor) {
                return Err(PretrainError::Diverged { step, loss: train_mse, min_loss: min_train });
            }
            let (val_mse, val_torque_mse) = evaluate(net, data, &val);
            evals.push(EvalPoint { step, lr, train_mse, val_mse, val_torque_mse });
            log::debug!("pretrain step {step}: train {train_mse:.3e} val {val_mse:.3e} torque {val_torque_mse:.3e}");
            best_val = best_val.min(val_mse);
            best_history.push(best_val);
            let k = best_history.len();
            let w = cfg.plateau_evals.max(1);
            if k > w {
                let before = best_history[k - 1 - w];
                let gain = (before - best_val) / before.max(1e-300);
                if gain < cfg.plateau_tol {
                    if drops >= cfg.lr_drops {
                        return Ok(RegressReport {
                            steps: step,
                            stop: StopReason::Plateau,
                            evals,
                            train_rows: train.len(),
                            val_rows: val.len(),
                            val_torque_mean_square: val_ms,
                        });
                    }
                    drops += 1;
                    lr *= cfg.lr_drop_factor;
                    best_history.clear();
                    best_history.push(best_val);
                }
            }
        }
    }
    Ok(RegressReport {
        steps: cfg.max_steps,
        stop: StopReason::MaxSteps,
        evals,
        train_rows: train.len(),
        val_rows: val.len(),
        val_torque_mean_square: val_ms,
    })
}
