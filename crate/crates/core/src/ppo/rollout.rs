use rand::Rng;
use rayon::prelude::*;

use super::gae::{compute_advantages, normalize};
use crate::env::{Done, EpisodeRecord, Environment, Step};
use crate::nets::{GaussianPolicy, Mlp};

/// Return and length of an episode that finished during collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStat {
    pub ret: f64,
    pub length: usize,
    pub failed: bool,
}

/// Transitions from one collection phase, stored environment by
/// environment so each stream is contiguous.
#[derive(Debug, Clone, Default)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<Done>,
    /// Value of the state after each step where the trajectory is cut.
    pub bootstrap: Vec<f64>,
    /// Start offset of every environment stream.
    pub streams: Vec<usize>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub episodes: Vec<EpisodeStat>,
    pub records: Vec<EpisodeRecord>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// GAE per stream, then advantage normalization over the whole batch.
    /// Returns are computed before normalization.
    pub fn finish(&mut self, gamma: f64, lambda: f64) {
        let n = self.len();
        self.advantages = vec![0.0; n];
        self.returns = vec![0.0; n];
        let mut bounds = self.streams.clone();
        bounds.push(n);
        for w in bounds.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (adv, ret) = compute_advantages(
                &self.rewards[a..b],
                &self.values[a..b],
                &self.dones[a..b],
                &self.bootstrap[a..b],
                gamma,
                lambda,
            );
            self.advantages[a..b].copy_from_slice(&adv);
            self.returns[a..b].copy_from_slice(&ret);
        }
        normalize(&mut self.advantages);
    }

    pub fn mean_reward(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.rewards.iter().sum::<f64>() / self.len() as f64
    }
}

/// A set of environments stepped in lockstep, each keeping its episode
/// running across collection phases.
pub struct VecEnv {
    envs: Vec<Box<dyn Environment>>,
    obs: Vec<Vec<f64>>,
    ep_ret: Vec<f64>,
    ep_len: Vec<usize>,
}

impl VecEnv {
    /// Seeds environment `i` with `seed + i` and resets it.
    pub fn new(mut envs: Vec<Box<dyn Environment>>, seed: u64) -> Self {
        let obs = envs
            .iter_mut()
            .enumerate()
            .map(|(i, e)| {
                e.seed(seed.wrapping_add(i as u64));
                e.reset()
            })
            .collect();
        let n = envs.len();
        VecEnv { envs, obs, ep_ret: vec![0.0; n], ep_len: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.envs[0].obs_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.envs[0].act_dim()
    }

    pub fn action_std(&self) -> Vec<f64> {
        self.envs[0].action_std()
    }

    pub fn envs_mut(&mut self) -> &mut [Box<dyn Environment>] {
        &mut self.envs
    }

    /// Collects exactly `n` transitions. The first `n mod len` environments
    /// take one extra step. Episodes still running at the end are cut with a
    /// bootstrapped value and continue in the next call.
    pub fn collect<R: Rng + ?Sized>(
        &mut self,
        policy: &GaussianPolicy,
        value: &Mlp,
        value_scale: f64,
        n: usize,
        rng: &mut R,
    ) -> RolloutBatch {
        let ne = self.envs.len();
        let (od, ad) = (self.obs_dim(), self.act_dim());
        let counts: Vec<usize> = (0..ne).map(|e| n / ne + usize::from(e < n % ne)).collect();
        let t_max = counts.iter().copied().max().unwrap_or(0);

        struct Stream {
            obs: Vec<f64>,
            actions: Vec<f64>,
            logp: Vec<f64>,
            rewards: Vec<f64>,
            values: Vec<f64>,
            dones: Vec<Done>,
            boot_obs: Vec<(usize, Vec<f64>)>,
        }
        let mut streams: Vec<Stream> = counts
            .iter()
            .map(|c| Stream {
                obs: Vec::with_capacity(c * od),
                actions: Vec::with_capacity(c * ad),
                logp: Vec::with_capacity(*c),
                rewards: Vec::with_capacity(*c),
                values: Vec::with_capacity(*c),
                dones: Vec::with_capacity(*c),
                boot_obs: Vec::new(),
            })
            .collect();
        let mut episodes = Vec::new();

        for t in 0..t_max {
            let active: Vec<usize> = (0..ne).filter(|e| counts[*e] > t).collect();
            let x: Vec<f64> = active.iter().flat_map(|e| self.obs[*e].iter().copied()).collect();
            let means = policy.mean.forward_batch(&x, active.len());
            let vals = value.forward_batch(&x, active.len());
            let mut actions = vec![Vec::new(); ne];
            for (k, &e) in active.iter().enumerate() {
                let (a, lp) = policy.sample_around(&means[k * ad..(k + 1) * ad], rng);
                let s = &mut streams[e];
                s.obs.extend_from_slice(&self.obs[e]);
                s.actions.extend_from_slice(&a);
                s.logp.push(lp);
                s.values.push(vals[k] * value_scale);
                actions[e] = a;
            }
            let steps: Vec<Option<Step>> = self
                .envs
                .par_iter_mut()
                .zip(actions.par_iter())
                .enumerate()
                .map(|(e, (env, a))| (counts[e] > t).then(|| env.step(a)))
                .collect();
            for (e, step) in steps.into_iter().enumerate() {
                let Some(step) = step else { continue };
                let s = &mut streams[e];
                s.rewards.push(step.reward);
                s.dones.push(step.done);
                self.ep_ret[e] += step.reward;
                self.ep_len[e] += 1;
                let idx = s.rewards.len() - 1;
                let last = idx + 1 == counts[e];
                if step.done.is_done() {
                    episodes.push(EpisodeStat {
                        ret: self.ep_ret[e],
                        length: self.ep_len[e],
                        failed: step.done == Done::Terminal,
                    });
                    self.ep_ret[e] = 0.0;
                    self.ep_len[e] = 0;
                    if step.done == Done::Truncated {
                        s.boot_obs.push((idx, step.obs));
                    }
                    self.obs[e] = self.envs[e].reset();
                } else {
                    if last {
                        s.boot_obs.push((idx, step.obs.clone()));
                    }
                    self.obs[e] = step.obs;
                }
            }
        }

        let mut batch = RolloutBatch { obs_dim: od, act_dim: ad, episodes, ..Default::default() };
        for (e, s) in streams.into_iter().enumerate() {
            batch.streams.push(batch.rewards.len());
            let mut boot = vec![0.0; s.rewards.len()];
            if !s.boot_obs.is_empty() {
                let x: Vec<f64> = s.boot_obs.iter().flat_map(|(_, o)| o.iter().copied()).collect();
                let v = value.forward_batch(&x, s.boot_obs.len());
                for (k, (idx, _)) in s.boot_obs.iter().enumerate() {
                    boot[*idx] = v[k] * value_scale;
                }
            }
            batch.obs.extend(s.obs);
            batch.actions.extend(s.actions);
            batch.log_probs.extend(s.logp);
            batch.rewards.extend(s.rewards);
            batch.values.extend(s.values);
            batch.dones.extend(s.dones);
            batch.bootstrap.extend(boot);
            batch.records.extend(self.envs[e].drain_episodes());
        }
        batch
    }
}
