//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use tbrl::reward::RewardInput;
use tbrl::robots::ContactPhase;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with unit eigenvectors whose
/// largest-magnitude entry is positive.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b][b].total_cmp(&m[a][a]));
    let values = order.iter().map(|&k| m[k][k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][k]).collect();
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            col.iter_mut().for_each(|x| *x /= norm);
            let big = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
            if col[big] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    (values, vectors)
}

/// Sample correlation matrix of the columns of `rows`.
pub fn correlation(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let cov = |a: usize, b: usize| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0);
    let sd: Vec<f64> = (0..p).map(|j| cov(j, j).sqrt()).collect();
    (0..p).map(|a| (0..p).map(|b| cov(a, b) / (sd[a] * sd[b])).collect()).collect()
}

/// Reward table written out term by term from its published definition.
pub fn reference_reward(r: &RewardInput) -> [f64; 10] {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let zeros = [0.0; 6];
    let flags_match = match r.label {
        ContactPhase::Double => r.contact == [true, true],
        ContactPhase::SingleRight => r.contact == [true, false],
        ContactPhase::SingleLeft => r.contact == [false, true],
    };
    let fnorm = |f: &tbrl::dynamics::Vec2| (f.x * f.x + f.y * f.y).sqrt();
    let f_sum = fnorm(&r.force[0]) + fnorm(&r.force[1]);
    let df_sum = fnorm(&(r.force[0] - r.prev_force[0])) + fnorm(&(r.force[1] - r.prev_force[1]));
    [
        0.3 * (-13.2 * (r.pitch_ref - r.pitch).powi(2)).exp(),
        0.35 * (-4.0 * sq(&r.q_ref, &r.q)).exp(),
        if flags_match { 0.2 } else { 0.0 },
        0.3 * (-3.0 * (r.v_cmd - r.v_x).powi(2)).exp(),
        0.05 * (-0.01 * sq(&r.qdot, &zeros)).exp(),
        0.05 * (-20.0 * sq(&r.qddot, &zeros)).exp(),
        0.1 * (-0.0005 * f_sum).exp(),
        0.1 * (-0.0005 * df_sum).exp(),
        0.05 * (-0.01 * sq(&r.torque, &zeros).sqrt()).exp(),
        0.2 * (-0.01 * sq(&r.torque, &r.prev_torque).sqrt()).exp(),
    ]
}
