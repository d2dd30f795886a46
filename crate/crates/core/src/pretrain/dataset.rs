//! Supervised pre-training samples and their file format.
//!
//! ```text
//! "TBDS1"        5 bytes
//! rows           u64
//! obs_dim        u32
//! target_dim     u32
//! data           rows × (obs_dim + target_dim) × f64, observation first
//! ```
//!
//! Little-endian throughout.

use std::io::Write;
use std::path::Path;

use super::PretrainError;

pub const DATASET_MAGIC: &[u8; 5] = b"TBDS1";
const HEADER_LEN: usize = 5 + 8 + 4 + 4;

/// Which feet touched the ground when a sample was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Support {
    Double,
    Right,
    Left,
}

impl Support {
    pub fn from_contact(contact: [bool; 2]) -> Option<Self> {
        match contact {
            [true, true] => Some(Support::Double),
            [true, false] => Some(Support::Right),
            [false, true] => Some(Support::Left),
            [false, false] => None,
        }
    }

    pub fn is_single(self) -> bool {
        self != Support::Double
    }
}

/// Observation/target pairs in row-major storage.
///
/// Targets are in the policy's normalized action units: joint torques
/// divided by their limits, then the phase action.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub obs_dim: usize,
    pub target_dim: usize,
    pub obs: Vec<f64>,
    pub targets: Vec<f64>,
    /// Contact state per row; empty for datasets read from disk.
    pub support: Vec<Support>,
}

impl Dataset {
    pub fn new(obs_dim: usize, target_dim: usize) -> Self {
        Dataset { obs_dim, target_dim, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        if self.obs_dim == 0 {
            0
        } else {
            self.obs.len() / self.obs_dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, obs: &[f64], target: &[f64], support: Support) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        debug_assert_eq!(target.len(), self.target_dim);
        self.obs.extend_from_slice(obs);
        self.targets.extend_from_slice(target);
        self.support.push(support);
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn target_row(&self, i: usize) -> &[f64] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }

    pub fn append(&mut self, other: Dataset) {
        self.obs.extend(other.obs);
        self.targets.extend(other.targets);
        self.support.extend(other.support);
    }

    /// Fraction of rows in single and in double support.
    pub fn support_fractions(&self) -> (f64, f64) {
        if self.support.is_empty() {
            return (0.0, 0.0);
        }
        let n = self.support.len() as f64;
        let single = self.support.iter().filter(|s| s.is_single()).count() as f64;
        (single / n, (n - single) / n)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let rows = self.len();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * rows * (self.obs_dim + self.target_dim));
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.obs_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.target_dim as u32).to_le_bytes());
        for i in 0..rows {
            for v in self.obs_row(i).iter().chain(self.target_row(i)) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, PretrainError> {
        let bad = |m: &str| PretrainError::Dataset(m.to_string());
        if buf.len() < HEADER_LEN {
            return Err(bad("file shorter than header"));
        }
        if &buf[..5] != DATASET_MAGIC {
            return Err(bad("bad magic"));
        }
        let rows = u64::from_le_bytes(buf[5..13].try_into().unwrap()) as usize;
        let obs_dim = u32::from_le_bytes(buf[13..17].try_into().unwrap()) as usize;
        let target_dim = u32::from_le_bytes(buf[17..21].try_into().unwrap()) as usize;
        if obs_dim == 0 || target_dim == 0 {
            return Err(bad("zero dimension"));
        }
        let width = obs_dim + target_dim;
        let expected = rows.checked_mul(width * 8).and_then(|n| n.checked_add(HEADER_LEN));
        if expected != Some(buf.len()) {
            return Err(bad(&format!("size {} does not match {rows} rows of {width} values", buf.len())));
        }
        let mut d = Dataset::new(obs_dim, target_dim);
        d.obs.reserve(rows * obs_dim);
        d.targets.reserve(rows * target_dim);
        for (k, c) in buf[HEADER_LEN..].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(c.try_into().unwrap());
            if k % width < obs_dim {
                d.obs.push(v);
            } else {
                d.targets.push(v);
            }
        }
        Ok(d)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PretrainError> {
        let mut f = std::fs::File::create(path.as_ref())?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PretrainError> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| PretrainError::Dataset(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut d = Dataset::new(3, 2);
        d.push(&[1.0, 2.0, 3.0], &[0.5, -0.5], Support::Double);
        d.push(&[4.0, 5.0, f64::MIN_POSITIVE], &[0.25, 1.0], Support::Left);
        let back = Dataset::from_bytes(&d.to_bytes()).unwrap();
        assert_eq!(back.obs, d.obs);
        assert_eq!(back.targets, d.targets);
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn rejects_truncation_and_magic() {
        let mut d = Dataset::new(2, 1);
        d.push(&[1.0, 2.0], &[3.0], Support::Right);
        let b = d.to_bytes();
        assert!(Dataset::from_bytes(&b[..b.len() - 1]).is_err());
        let mut m = b.clone();
        m[0] = b'X';
        assert!(Dataset::from_bytes(&m).is_err());
    }

    #[test]
    fn support_fractions_count_rows() {
        let mut d = Dataset::new(1, 1);
        for s in [Support::Double, Support::Right, Support::Left, Support::Double] {
            d.push(&[0.0], &[0.0], s);
        }
        assert_eq!(d.support_fractions(), (0.5, 0.5));
    }
}
