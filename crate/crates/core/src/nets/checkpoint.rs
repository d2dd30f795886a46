//! Binary checkpoint format.
//!
//! ```text
//! "TBRL1"                 5 bytes
//! version                 u32
//! n_dims                  u32
//! dims                    n_dims × u32
//! params                  f64 × Σ(out·in + out), layer by layer:
//!                         weights row-major (out × in), then biases
//! sigma_len               u32   (0 for networks without an action std)
//! sigma                   sigma_len × f64
//! step                    u64   training samples consumed
//! ```
//!
//! Every integer and float is little-endian.

use std::io::Write;
use std::path::Path;

use super::{param_count, GaussianPolicy, Mlp, NetError};

pub const MAGIC: &[u8; 5] = b"TBRL1";
pub const VERSION: u32 = 1;

/// A network, its optional action std and the sample counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: Mlp,
    pub sigma: Vec<f64>,
    pub step: u64,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NetError> {
        if self.buf.len() - self.pos < n {
            return Err(NetError::Truncated);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, NetError> {
        let bytes = self.take(n.checked_mul(8).ok_or(NetError::Truncated)?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

impl Checkpoint {
    pub fn from_policy(policy: &GaussianPolicy, step: u64) -> Self {
        Checkpoint { net: policy.mean.clone(), sigma: policy.std().to_vec(), step }
    }

    pub fn from_net(net: &Mlp, step: u64) -> Self {
        Checkpoint { net: net.clone(), sigma: Vec::new(), step }
    }

    pub fn policy(&self) -> Result<GaussianPolicy, NetError> {
        GaussianPolicy::new(self.net.clone(), self.sigma.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.net.dims();
        let mut out = Vec::with_capacity(32 + 8 * (self.net.params().len() + self.sigma.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for p in self.net.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out.extend_from_slice(&(self.sigma.len() as u32).to_le_bytes());
        for s in &self.sigma {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, NetError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(MAGIC.len()).map_err(|_| NetError::BadMagic)? != MAGIC {
            return Err(NetError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(NetError::Version(version));
        }
        let n_dims = r.u32()? as usize;
        if !(2..=64).contains(&n_dims) {
            return Err(NetError::Corrupt(format!("{n_dims} layer widths")));
        }
        let dims = (0..n_dims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        if dims.contains(&0) {
            return Err(NetError::Corrupt("zero layer width".into()));
        }
        let params = r.f64s(param_count(&dims))?;
        let sigma_len = r.u32()? as usize;
        let sigma = r.f64s(sigma_len)?;
        let step = r.u64()?;
        if r.pos != buf.len() {
            return Err(NetError::TrailingBytes(buf.len() - r.pos));
        }
        let net = Mlp::from_params(&dims, params)?;
        if sigma_len != 0 && sigma_len != net.output_dim() {
            return Err(NetError::Dim { expected: net.output_dim(), got: sigma_len });
        }
        Ok(Checkpoint { net, sigma, step })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| NetError::Io(format!("{}: {e}", path.display()));
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)?;
        f.sync_all().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let path = path.as_ref();
        let buf = std::fs::read(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&buf)
    }

    /// Loads and checks the layer widths.
    pub fn load_expecting(path: impl AsRef<Path>, dims: &[usize]) -> Result<Self, NetError> {
        let c = Self::load(path)?;
        if c.net.dims() != dims {
            return Err(NetError::Shape { expected: dims.to_vec(), got: c.net.dims().to_vec() });
        }
        Ok(c)
    }

    /// Human-readable parameter listing.
    pub fn dump_text(&self) -> String {
        let dims = self.net.dims();
        let mut s = format!("dims {:?}\nstep {}\nsigma {:?}\n", dims, self.step, self.sigma);
        let mut off = 0;
        for l in 0..dims.len() - 1 {
            let (i, o) = (dims[l], dims[l + 1]);
            s.push_str(&format!("layer {l} weights {o}x{i}\n"));
            for row in self.net.params()[off..off + o * i].chunks(i) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
            off += o * i;
            let line: Vec<String> = self.net.params()[off..off + o].iter().map(|v| format!("{v:.6e}")).collect();
            s.push_str(&format!("layer {l} bias\n{}\n", line.join(" ")));
            off += o;
        }
        s
    }
}
