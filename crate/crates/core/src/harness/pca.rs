//! Principal component analysis of standardized observations.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Column standard deviations used for standardization (1 where a
    /// column is constant).
    pub scale: Vec<f64>,
    /// Eigenvalues of the correlation matrix, largest first.
    pub variances: Vec<f64>,
    /// Unit-norm principal axes in the same order; the entry of largest
    /// magnitude in each is positive.
    pub axes: Vec<Vec<f64>>,
}

impl Pca {
    pub fn explained_ratio(&self) -> Vec<f64> {
        let total: f64 = self.variances.iter().sum();
        self.variances.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect()
    }

    pub fn first_axis(&self) -> &[f64] {
        &self.axes[0]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PcaError {
    #[error("PCA needs at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("rows have inconsistent widths")]
    Ragged,
}

/// Flips `v` so its largest-magnitude entry is positive.
pub fn orient(v: &mut [f64]) {
    let k = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()));
    if let Some(k) = k {
        if v[k] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Centres and scales each column to unit sample variance.
pub fn standardize(rows: &[Vec<f64>]) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>), PcaError> {
    let n = rows.len();
    if n < 2 {
        return Err(PcaError::TooFewRows(n));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(PcaError::Ragged);
    }
    let mut z = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 0..p {
        let m = z.column(j).sum() / n as f64;
        let var = z.column(j).iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        mean[j] = m;
        if var > 0.0 {
            scale[j] = var.sqrt();
        }
        for i in 0..n {
            z[(i, j)] = (z[(i, j)] - m) / scale[j];
        }
    }
    Ok((z, mean, scale))
}

/// PCA of the rows of `rows` after standardization.
pub fn pca(rows: &[Vec<f64>]) -> Result<Pca, PcaError> {
    let (z, mean, scale) = standardize(rows)?;
    let n = z.nrows();
    let cov = z.transpose() * &z / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let variances = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let axes = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            orient(&mut v);
            v
        })
        .collect();
    Ok(Pca { mean, scale, variances, axes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_column_gets_the_first_axis() {
        // Two perfectly correlated columns plus an independent one.
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64;
                vec![t, 2.0 * t + 1.0, ((i * 7919) % 13) as f64]
            })
            .collect();
        let p = pca(&rows).unwrap();
        let a = p.first_axis();
        assert!((a[0] - a[1]).abs() < 1e-9);
        assert!((a[0] - 0.5f64.sqrt()).abs() < 1e-2);
        assert!(p.variances[0] >= p.variances[1] && p.variances[1] >= p.variances[2]);
        assert!((p.variances.iter().sum::<f64>() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn axes_unit_norm_and_oriented() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), -(i as f64).cos(), (i % 4) as f64]).collect();
        let p = pca(&rows).unwrap();
        for a in &p.axes {
            assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            let k = (0..a.len()).max_by(|&x, &y| a[x].abs().total_cmp(&a[y].abs())).unwrap();
            assert!(a[k] > 0.0);
        }
    }

    #[test]
    fn constant_column_is_tolerated() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let p = pca(&rows).unwrap();
        assert!(p.variances.iter().all(|v| v.is_finite()));
        assert!(matches!(pca(&rows[..1]), Err(PcaError::TooFewRows(1))));
    }
}
