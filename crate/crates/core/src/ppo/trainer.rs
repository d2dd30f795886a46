use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{update, PpoConfig, PpoError, VecEnv};
use crate::env::{episode_csv_row, write_episode_csv, Environment, EpisodeRecord};
use crate::nets::{standard_dims, Adam, Checkpoint, GaussianPolicy, Mlp};

/// One learning-curve point, written after every update.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub samples: u64,
    pub update: u64,
    /// Mean return of episodes that ended during this batch (NaN if none did).
    pub mean_episode_reward: f64,
    pub mean_episode_length: f64,
    pub episodes: usize,
    pub failures: usize,
    pub mean_step_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub lr: f64,
}

pub const CURVE_HEADER: &str = "samples,update,mean_episode_reward,mean_episode_length,episodes,failures,\
mean_step_reward,policy_loss,value_loss,approx_kl,clip_fraction,lr";

impl CurveRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.samples,
            self.update,
            self.mean_episode_reward,
            self.mean_episode_length,
            self.episodes,
            self.failures,
            self.mean_step_reward,
            self.policy_loss,
            self.value_loss,
            self.approx_kl,
            self.clip_fraction,
            self.lr
        )
    }
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub samples: u64,
    pub updates: u64,
    pub final_policy: Option<PathBuf>,
    pub final_critic: Option<PathBuf>,
    pub aborted: Option<String>,
}

/// Alternates collection and update phases until the sample budget is spent.
pub struct Trainer {
    pub cfg: PpoConfig,
    pub policy: GaussianPolicy,
    pub value: Mlp,
    policy_opt: Adam,
    value_opt: Adam,
    venv: VecEnv,
    rng: ChaCha8Rng,
    samples: u64,
    updates: u64,
    curve: Vec<CurveRow>,
    records: Vec<EpisodeRecord>,
}

impl Trainer {
    /// Fresh networks (`[obs, 256, 256, act]` policy with a 0.01-scaled
    /// output layer, `[obs, 256, 256, 1]` critic), or `policy` when given.
    pub fn new(cfg: PpoConfig, envs: Vec<Box<dyn Environment>>, policy: Option<GaussianPolicy>) -> Result<Self, PpoError> {
        Self::with_dims(cfg, envs, policy, None)
    }

    /// Like [`Trainer::new`] with custom hidden widths (for small tests).
    pub fn with_dims(
        cfg: PpoConfig,
        envs: Vec<Box<dyn Environment>>,
        policy: Option<GaussianPolicy>,
        hidden: Option<&[usize]>,
    ) -> Result<Self, PpoError> {
        if envs.is_empty() {
            return Err(PpoError::NoEnvironments);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let venv = VecEnv::new(envs, cfg.seed.wrapping_mul(1000).wrapping_add(17));
        let (od, ad) = (venv.obs_dim(), venv.act_dim());
        let dims = |out: usize| match hidden {
            Some(h) => {
                let mut d = vec![od];
                d.extend_from_slice(h);
                d.push(out);
                d
            }
            None => standard_dims(od, out),
        };
        let policy = match policy {
            Some(p) => {
                if p.obs_dim() != od {
                    return Err(PpoError::Shape { expected: p.obs_dim(), got: od });
                }
                GaussianPolicy::new(p.mean, venv.action_std())?
            }
            None => GaussianPolicy::new(Mlp::init(&dims(ad), 0.01, &mut rng), venv.action_std())?,
        };
        let value = Mlp::init(&dims(1), 1.0, &mut rng);
        Ok(Trainer {
            policy_opt: Adam::new(policy.mean.params().len()),
            value_opt: Adam::new(value.params().len()),
            cfg,
            policy,
            value,
            venv,
            rng,
            samples: 0,
            updates: 0,
            curve: Vec::new(),
            records: Vec::new(),
        })
    }

    /// Continues from saved policy and critic checkpoints; the sample
    /// counter (and hence the learning-rate schedule) resumes from the
    /// policy checkpoint.
    pub fn resume(cfg: PpoConfig, envs: Vec<Box<dyn Environment>>, policy: &Checkpoint, critic: &Checkpoint) -> Result<Self, PpoError> {
        let mut t = Self::new(cfg, envs, Some(policy.policy()?))?;
        if critic.net.input_dim() != t.value.input_dim() {
            return Err(PpoError::Shape { expected: t.value.input_dim(), got: critic.net.input_dim() });
        }
        t.value = critic.net.clone();
        t.value_opt = Adam::new(t.value.params().len());
        t.samples = policy.step;
        t.rng = ChaCha8Rng::seed_from_u64(t.cfg.seed ^ policy.step);
        Ok(t)
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn curve(&self) -> &[CurveRow] {
        &self.curve
    }

    pub fn episode_records(&self) -> &[EpisodeRecord] {
        &self.records
    }

    pub fn venv_mut(&mut self) -> &mut VecEnv {
        &mut self.venv
    }

    /// One collect/update cycle.
    pub fn iterate(&mut self) -> Result<CurveRow, PpoError> {
        let scale = self.cfg.value_scale();
        let mut batch = self.venv.collect(&self.policy, &self.value, scale, self.cfg.batch_size, &mut self.rng);
        batch.finish(self.cfg.gamma, self.cfg.lambda);
        let lr = self.cfg.lr_at(self.samples);
        self.samples += batch.len() as u64;
        let stats = update(
            &self.cfg,
            &mut self.policy,
            &mut self.value,
            &mut self.policy_opt,
            &mut self.value_opt,
            &batch,
            lr,
            self.updates,
            &mut self.rng,
        )?;
        self.updates += 1;
        let eps = &batch.episodes;
        let (mean_ret, mean_len) = if eps.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let n = eps.len() as f64;
            (eps.iter().map(|e| e.ret).sum::<f64>() / n, eps.iter().map(|e| e.length as f64).sum::<f64>() / n)
        };
        let row = CurveRow {
            samples: self.samples,
            update: self.updates,
            mean_episode_reward: mean_ret,
            mean_episode_length: mean_len,
            episodes: eps.len(),
            failures: eps.iter().filter(|e| e.failed).count(),
            mean_step_reward: batch.mean_reward(),
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            approx_kl: stats.approx_kl,
            clip_fraction: stats.clip_fraction,
            lr,
        };
        self.records.extend(batch.records);
        self.curve.push(row.clone());
        Ok(row)
    }

    pub fn save(&self, dir: &Path, tag: &str) -> Result<(PathBuf, PathBuf), PpoError> {
        std::fs::create_dir_all(dir)?;
        let p = dir.join(format!("policy_{tag}.bin"));
        let c = dir.join(format!("critic_{tag}.bin"));
        Checkpoint::from_policy(&self.policy, self.samples).save(&p)?;
        Checkpoint::from_net(&self.value, self.samples).save(&c)?;
        Ok((p, c))
    }

    /// Runs until `cfg.total_samples`. With `out`, writes `curve.csv` and
    /// `episodes.csv` (flushed after every update) and checkpoints under
    /// `out/checkpoints`. A zero budget only writes the initial checkpoint.
    pub fn train(&mut self, out: Option<&Path>) -> Result<TrainSummary, PpoError> {
        let mut curve_file = None;
        let mut episode_file = None;
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            let mut f = BufWriter::new(File::create(dir.join("curve.csv"))?);
            writeln!(f, "{CURVE_HEADER}")?;
            f.flush()?;
            curve_file = Some(f);
            let mut e = BufWriter::new(File::create(dir.join("episodes.csv"))?);
            write_episode_csv(&[], &mut e)?;
            e.flush()?;
            episode_file = Some(dir.join("episodes.csv"));
        }
        let ckpt_dir = out.map(|d| d.join("checkpoints"));
        let mut last_saved = None;
        if let Some(d) = &ckpt_dir {
            if self.cfg.total_samples == 0 || self.samples == 0 {
                last_saved = Some(self.save(d, "init")?);
            }
        }
        let mut aborted = None;
        while self.samples < self.cfg.total_samples {
            let n_records = self.records.len();
            match self.iterate() {
                Ok(row) => {
                    log::info!(
                        "samples {} reward/ep {:.3} len {:.1} step {:.4} vloss {:.4} kl {:.2e}",
                        row.samples,
                        row.mean_episode_reward,
                        row.mean_episode_length,
                        row.mean_step_reward,
                        row.value_loss,
                        row.approx_kl
                    );
                    if let Some(f) = curve_file.as_mut() {
                        writeln!(f, "{}", row.csv())?;
                        f.flush()?;
                    }
                    if let Some(path) = &episode_file {
                        let mut f = OpenOptions::new().append(true).open(path)?;
                        for r in &self.records[n_records..] {
                            writeln!(f, "{}", episode_csv_row(r))?;
                        }
                    }
                    if let Some(d) = &ckpt_dir {
                        if self.cfg.checkpoint_every > 0 && self.updates % self.cfg.checkpoint_every == 0 {
                            last_saved = Some(self.save(d, &self.samples.to_string())?);
                        }
                    }
                }
                Err(e @ PpoError::NonFinite { .. }) => {
                    aborted = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(d) = &ckpt_dir {
            if self.updates > 0 {
                last_saved = Some(self.save(d, "final")?);
            }
        }
        Ok(TrainSummary {
            samples: self.samples,
            updates: self.updates,
            final_policy: last_saved.as_ref().map(|p| p.0.clone()),
            final_critic: last_saved.map(|p| p.1),
            aborted,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::Pendulum;

    fn pendulums(n: usize) -> Vec<Box<dyn Environment>> {
        (0..n).map(|_| Box::new(Pendulum::default()) as Box<dyn Environment>).collect()
    }

    #[test]
    fn zero_budget_writes_initial_checkpoint_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PpoConfig { total_samples: 0, ..PpoConfig::default() };
        let mut t = Trainer::with_dims(cfg, pendulums(2), None, Some(&[8, 8])).unwrap();
        let s = t.train(Some(dir.path())).unwrap();
        assert_eq!(s.updates, 0);
        let files: Vec<_> = std::fs::read_dir(dir.path().join("checkpoints")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(files.len(), 2);
        assert!(dir.path().join("checkpoints/policy_init.bin").exists());
    }

    #[test]
    fn sample_accounting_and_curve() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PpoConfig { total_samples: 2000, batch_size: 500, minibatch: 64, ..PpoConfig::default() };
        let mut t = Trainer::with_dims(cfg, pendulums(4), None, Some(&[16, 16])).unwrap();
        let s = t.train(Some(dir.path())).unwrap();
        assert_eq!(s.samples, 2000);
        assert_eq!(s.updates, 4);
        let text = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        assert_eq!(text.lines().count(), 5);
        let back = Checkpoint::load(s.final_policy.unwrap()).unwrap();
        assert_eq!(back.step, 2000);
    }

    #[test]
    fn resume_restores_counter() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PpoConfig { total_samples: 1000, batch_size: 500, minibatch: 64, ..PpoConfig::default() };
        let mut t = Trainer::with_dims(cfg.clone(), pendulums(2), None, Some(&[16, 16])).unwrap();
        let s = t.train(Some(dir.path())).unwrap();
        let p = Checkpoint::load(s.final_policy.unwrap()).unwrap();
        let c = Checkpoint::load(s.final_critic.unwrap()).unwrap();
        let r = Trainer::resume(PpoConfig { total_samples: 2000, ..cfg }, pendulums(2), &p, &c).unwrap();
        assert_eq!(r.samples(), 1000);
        assert_eq!(r.policy.mean, t.policy.mean);
    }
}
