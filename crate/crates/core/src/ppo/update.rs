use rand::seq::SliceRandom;
use rand::Rng;

use super::{PpoConfig, PpoError, RolloutBatch};
use crate::nets::{Adam, GaussianPolicy, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    /// Mean clipped-surrogate loss (negated objective).
    pub policy_loss: f64,
    /// Mean squared error of the value prediction in units of the value scale.
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

fn clip_grad(g: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        g.iter_mut().for_each(|v| *v *= s);
    }
}

/// Surrogate loss and its gradient with respect to the policy mean for one
/// minibatch. Returns `(loss, d_mean, kl, clipped)`.
pub(crate) fn surrogate(
    policy: &GaussianPolicy,
    mean: &[f64],
    actions: &[f64],
    old_logp: &[f64],
    adv: &[f64],
    clip: f64,
) -> (f64, Vec<f64>, f64, usize) {
    let m = adv.len();
    let ad = policy.act_dim();
    let std = policy.std();
    let mut d = vec![0.0; m * ad];
    let (mut loss, mut kl, mut clipped) = (0.0, 0.0, 0);
    for i in 0..m {
        let mu = &mean[i * ad..(i + 1) * ad];
        let a = &actions[i * ad..(i + 1) * ad];
        let lp = policy.log_prob(mu, a);
        let ratio = (lp - old_logp[i]).exp();
        let a_i = adv[i];
        let unclipped = ratio * a_i;
        let clipped_obj = ratio.clamp(1.0 - clip, 1.0 + clip) * a_i;
        loss -= unclipped.min(clipped_obj);
        kl += old_logp[i] - lp;
        let outside = (a_i >= 0.0 && ratio > 1.0 + clip) || (a_i < 0.0 && ratio < 1.0 - clip);
        if ratio > 1.0 + clip || ratio < 1.0 - clip {
            clipped += 1;
        }
        if !outside {
            // d(−r·A)/dμ = −A·r·(a − μ)/σ²
            for k in 0..ad {
                d[i * ad + k] = -a_i * ratio * (a[k] - mu[k]) / (std[k] * std[k]) / m as f64;
            }
        }
    }
    (loss / m as f64, d, kl / m as f64, clipped)
}

/// Several epochs of minibatch descent on the clipped surrogate and the
/// value MSE. On a non-finite loss the networks and optimizer states are
/// restored to their values before the call.
#[allow(clippy::too_many_arguments)]
pub fn update<R: Rng + ?Sized>(
    cfg: &PpoConfig,
    policy: &mut GaussianPolicy,
    value: &mut Mlp,
    policy_opt: &mut Adam,
    value_opt: &mut Adam,
    batch: &RolloutBatch,
    lr: f64,
    update_index: u64,
    rng: &mut R,
) -> Result<UpdateStats, PpoError> {
    let saved = (policy.clone(), value.clone(), policy_opt.clone(), value_opt.clone());
    let result = run_epochs(cfg, policy, value, policy_opt, value_opt, batch, lr, rng);
    match result {
        Some(stats) if stats.policy_loss.is_finite() && stats.value_loss.is_finite() && policy.mean.is_finite() && value.is_finite() => {
            Ok(stats)
        }
        _ => {
            (*policy, *value, *policy_opt, *value_opt) = saved;
            log::warn!("non-finite loss in update {update_index}; parameters restored");
            Err(PpoError::NonFinite { update: update_index })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_epochs<R: Rng + ?Sized>(
    cfg: &PpoConfig,
    policy: &mut GaussianPolicy,
    value: &mut Mlp,
    policy_opt: &mut Adam,
    value_opt: &mut Adam,
    batch: &RolloutBatch,
    lr: f64,
    rng: &mut R,
) -> Option<UpdateStats> {
    let n = batch.len();
    let (od, ad) = (batch.obs_dim, batch.act_dim);
    let scale = cfg.value_scale();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    let mut count = 0usize;
    let mut clipped = 0usize;
    let mut pg = vec![0.0; policy.mean.params().len()];
    let mut vg = vec![0.0; value.params().len()];
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for mb in idx.chunks(cfg.minibatch.max(1)) {
            let m = mb.len();
            let mut x = Vec::with_capacity(m * od);
            let mut acts = Vec::with_capacity(m * ad);
            let mut old = Vec::with_capacity(m);
            let mut adv = Vec::with_capacity(m);
            let mut target = Vec::with_capacity(m);
            for &i in mb {
                x.extend_from_slice(&batch.obs[i * od..(i + 1) * od]);
                acts.extend_from_slice(&batch.actions[i * ad..(i + 1) * ad]);
                old.push(batch.log_probs[i]);
                adv.push(batch.advantages[i]);
                target.push(batch.returns[i] / scale);
            }

            let tape = policy.mean.forward_tape(&x, m);
            let (loss, d_mean, kl, c) = surrogate(policy, tape.output(), &acts, &old, &adv, cfg.clip);
            if !loss.is_finite() {
                return None;
            }
            pg.iter_mut().for_each(|g| *g = 0.0);
            policy.mean.backward(&tape, &d_mean, &mut pg);
            clip_grad(&mut pg, cfg.max_grad_norm);

            let vtape = value.forward_tape(&x, m);
            let pred = vtape.output();
            let mut vloss = 0.0;
            let d_v: Vec<f64> = pred
                .iter()
                .zip(&target)
                .map(|(p, t)| {
                    vloss += (p - t) * (p - t);
                    2.0 * (p - t) / m as f64
                })
                .collect();
            vloss /= m as f64;
            if !vloss.is_finite() {
                return None;
            }
            vg.iter_mut().for_each(|g| *g = 0.0);
            value.backward(&vtape, &d_v, &mut vg);
            clip_grad(&mut vg, cfg.max_grad_norm);

            if lr != 0.0 {
                policy_opt.step(policy.mean.params_mut(), &pg, lr);
                value_opt.step(value.params_mut(), &vg, lr);
            }
            stats.policy_loss += loss;
            stats.value_loss += vloss;
            stats.approx_kl += kl;
            clipped += c;
            count += 1;
        }
    }
    if count > 0 {
        let k = count as f64;
        stats.policy_loss /= k;
        stats.value_loss /= k;
        stats.approx_kl /= k;
        stats.clip_fraction = clipped as f64 / (n * cfg.epochs) as f64;
    }
    Some(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Done;
    use crate::nets::Mlp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_batch(policy: &GaussianPolicy, n: usize, adv_zero: bool) -> RolloutBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut b = RolloutBatch { obs_dim: 3, act_dim: 2, ..Default::default() };
        for i in 0..n {
            let o = vec![(i as f64 * 0.3).sin(), (i as f64 * 0.7).cos(), 0.1];
            let (a, lp) = policy.sample(&o, &mut rng).unwrap();
            b.obs.extend(o);
            b.actions.extend(a);
            b.log_probs.push(lp);
            b.rewards.push(1.0);
            b.values.push(0.0);
            b.dones.push(Done::No);
            b.bootstrap.push(0.0);
            b.advantages.push(if adv_zero { 0.0 } else { (i as f64 * 1.1).sin() });
            b.returns.push(1.0);
        }
        b.streams = vec![0];
        b
    }

    fn setup() -> (GaussianPolicy, Mlp) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = GaussianPolicy::new(Mlp::init(&[3, 16, 16, 2], 0.01, &mut rng), vec![0.3, 0.3]).unwrap();
        let v = Mlp::init(&[3, 16, 16, 1], 1.0, &mut rng);
        (p, v)
    }

    #[test]
    fn unchanged_policy_surrogate_is_negative_mean_advantage() {
        let (p, _) = setup();
        let b = toy_batch(&p, 64, false);
        let mean = p.mean.forward_batch(&b.obs, 64);
        let (loss, _, kl, c) = surrogate(&p, &mean, &b.actions, &b.log_probs, &b.advantages, 0.2);
        let expect = -b.advantages.iter().sum::<f64>() / 64.0;
        assert!((loss - expect).abs() < 1e-12);
        assert!(kl.abs() < 1e-12);
        assert_eq!(c, 0);
    }

    #[test]
    fn zero_advantage_gives_zero_policy_gradient() {
        let (p, _) = setup();
        let b = toy_batch(&p, 32, true);
        let mean = p.mean.forward_batch(&b.obs, 32);
        let (_, d, _, _) = surrogate(&p, &mean, &b.actions, &b.log_probs, &b.advantages, 0.2);
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_lr_leaves_parameters_bit_identical() {
        let (mut p, mut v) = setup();
        let b = toy_batch(&p, 256, false);
        let (p0, v0) = (p.clone(), v.clone());
        let mut po = Adam::new(p.mean.params().len());
        let mut vo = Adam::new(v.params().len());
        let cfg = PpoConfig { minibatch: 32, ..PpoConfig::default() };
        update(&cfg, &mut p, &mut v, &mut po, &mut vo, &b, 0.0, 0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(p.mean.params().iter().zip(p0.mean.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(v.params().iter().zip(v0.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn non_finite_batch_restores_parameters() {
        let (mut p, mut v) = setup();
        let mut b = toy_batch(&p, 64, false);
        b.advantages[5] = f64::NAN;
        let p0 = p.clone();
        let mut po = Adam::new(p.mean.params().len());
        let mut vo = Adam::new(v.params().len());
        let cfg = PpoConfig { minibatch: 16, ..PpoConfig::default() };
        let r = update(&cfg, &mut p, &mut v, &mut po, &mut vo, &b, 1e-3, 7, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(PpoError::NonFinite { update: 7 })));
        assert_eq!(p, p0);
        assert_eq!(po.steps(), 0);
    }

    #[test]
    fn surrogate_gradient_matches_finite_difference() {
        let (p, _) = setup();
        let mut b = toy_batch(&p, 8, false);
        // Move the old log-probs so some ratios are away from one but inside the clip range.
        for (k, lp) in b.log_probs.iter_mut().enumerate() {
            *lp += 0.05 * ((k as f64) - 3.5) / 3.5;
        }
        let mean = p.mean.forward_batch(&b.obs, 8);
        let (_, d, _, _) = surrogate(&p, &mean, &b.actions, &b.log_probs, &b.advantages, 0.2);
        let h = 1e-6;
        for k in 0..mean.len() {
            let mut mp = mean.clone();
            let mut mm = mean.clone();
            mp[k] += h;
            mm[k] -= h;
            let lp = surrogate(&p, &mp, &b.actions, &b.log_probs, &b.advantages, 0.2).0;
            let lm = surrogate(&p, &mm, &b.actions, &b.log_probs, &b.advantages, 0.2).0;
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - d[k]).abs() < 1e-6, "k {k}: {fd} vs {}", d[k]);
        }
    }
}
