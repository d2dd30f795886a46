use crate::env::Done;

/// Generalized advantage estimation over one environment's consecutive
/// transitions.
///
/// `bootstrap[t]` is the value of the state reached after step `t`; it is
/// read only where the trajectory is cut without a terminal state: at time
/// limits (`Done::Truncated`) and after the last stored step. Terminal
/// steps contribute no future value. Returns `(advantages, returns)` with
/// `returns = advantages + values`.
pub fn compute_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[Done],
    bootstrap: &[f64],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n && bootstrap.len() == n);
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let last = t + 1 == n;
        let (next_value, carry) = match dones[t] {
            Done::Terminal => (0.0, false),
            Done::Truncated => (bootstrap[t], false),
            Done::No if last => (bootstrap[t], false),
            Done::No => (values[t + 1], true),
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        let a = if carry { delta + gamma * lambda * next_adv } else { delta };
        adv[t] = a;
        next_adv = a;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Shifts and scales to zero mean and unit (population) std.
pub fn normalize(x: &mut [f64]) {
    let n = x.len() as f64;
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-12);
    for v in x.iter_mut() {
        *v = (*v - mean) / std;
    }
    // A second centring pass removes the rounding left by the first.
    let m2 = x.iter().sum::<f64>() / n;
    for v in x.iter_mut() {
        *v -= m2;
    }
}
