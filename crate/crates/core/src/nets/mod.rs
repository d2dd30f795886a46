//! Multi-layer perceptrons, the fixed-std Gaussian policy, Adam and the
//! checkpoint format.

mod adam;
mod checkpoint;
mod mlp;
mod policy;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, MAGIC, VERSION};
pub use mlp::{param_count, Mlp, Tape};
pub use policy::GaussianPolicy;

/// Hidden layer width of the policy and value networks.
pub const HIDDEN: usize = 256;

/// `[input, 256, 256, output]`.
pub fn standard_dims(input: usize, output: usize) -> Vec<usize> {
    vec![input, HIDDEN, HIDDEN, output]
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },
    #[error("layer widths {got:?} do not match the expected {expected:?}")]
    Shape { expected: Vec<usize>, got: Vec<usize> },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("i/o error: {0}")]
    Io(String),
}
