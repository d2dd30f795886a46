//! Small statistics used by experiment summaries.

use crate::ppo::CurveRow;

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Rank correlation; NaN when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Episode-weighted mean episode reward over updates whose sample count is
/// past `start` (inclusive) and at most `end`.
pub fn curve_reward_between(curve: &[CurveRow], start: u64, end: u64) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for r in curve.iter().filter(|r| r.samples >= start && r.samples <= end && r.episodes > 0) {
        sum += r.mean_episode_reward * r.episodes as f64;
        n += r.episodes;
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Mean episode reward over the last `fraction` of the sample budget.
pub fn final_reward(curve: &[CurveRow], budget: u64, fraction: f64) -> f64 {
    let start = (budget as f64 * (1.0 - fraction)).floor() as u64;
    curve_reward_between(curve, start, u64::MAX)
}

/// Mean episode reward over the first `fraction` of the budget.
pub fn reward_at_fraction(curve: &[CurveRow], budget: u64, fraction: f64) -> f64 {
    curve_reward_between(curve, 0, (budget as f64 * fraction).ceil() as u64)
}

/// A cell succeeds when its final reward is at least `threshold` times the
/// best final reward in its sweep.
pub fn success_flags(finals: &[f64], threshold: f64) -> Vec<bool> {
    let best = finals.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    finals.iter().map(|v| v.is_finite() && best.is_finite() && *v >= threshold * best).collect()
}

/// Centred moving average with window `2k+1`, shrinking at the ends.
pub fn smooth(x: &[f64], k: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(x.len());
            let w: Vec<f64> = x[lo..hi].iter().copied().filter(|v| v.is_finite()).collect();
            mean(&w)
        })
        .collect()
}
