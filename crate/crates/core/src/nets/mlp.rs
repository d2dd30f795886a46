use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::NetError;

/// `C = alpha·A·B + beta·C` on row-major slices with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() >= m * n);
    // SAFETY: the index bounds of every operand were checked above and `c`
    // does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Fully connected network with ReLU hidden layers and a linear output.
///
/// Parameters live in one flat vector: for every layer the `out × in`
/// weight matrix in row-major order followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward_tape`] for a batch.
#[derive(Debug, Clone)]
pub struct Tape {
    n: usize,
    /// Input of every layer, then the network output.
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape holds at least the input")
    }

    pub fn batch(&self) -> usize {
        self.n
    }
}

pub fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

/// Random matrix with orthonormal rows or columns (whichever is shorter),
/// scaled by `gain`.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    let (r, c) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let g = DMatrix::<f64>::from_fn(r, c, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    // Fix column signs so the distribution is uniform over orthogonal matrices.
    let rdiag = qr.r().diagonal();
    for j in 0..c {
        if rdiag[j] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let v = if rows >= cols { q[(i, j)] } else { q[(j, i)] };
            out[i * cols + j] = gain * v;
        }
    }
    out
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|d| *d > 0), "network needs positive layer widths");
        Mlp { dims: dims.to_vec(), params: vec![0.0; param_count(dims)] }
    }

    /// Orthogonal weights with gain √2 on hidden layers and `out_gain` on
    /// the output layer; zero biases.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], out_gain: f64, rng: &mut R) -> Self {
        let mut net = Mlp::zeros(dims);
        let layers = dims.len() - 1;
        let mut off = 0;
        for l in 0..layers {
            let (i, o) = (dims[l], dims[l + 1]);
            let gain = if l + 1 == layers { out_gain } else { std::f64::consts::SQRT_2 };
            let w = orthogonal(o, i, gain, rng);
            net.params[off..off + o * i].copy_from_slice(&w);
            off += o * i + o;
        }
        net
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self, NetError> {
        let expected = param_count(dims);
        if params.len() != expected {
            return Err(NetError::Dim { expected, got: params.len() });
        }
        let mut net = Mlp::zeros(dims);
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Offsets of (weights, biases) for layer `l`.
    fn layer(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += self.dims[k + 1] * self.dims[k] + self.dims[k + 1];
        }
        (off, off + self.dims[l + 1] * self.dims[l])
    }

    /// Scales the output layer's weights and biases.
    pub fn scale_output(&mut self, s: f64) {
        let l = self.dims.len() - 2;
        let (w, _) = self.layer(l);
        for p in &mut self.params[w..] {
            *p *= s;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::Dim { expected: self.input_dim(), got: x.len() });
        }
        Ok(self.forward_batch(x, 1))
    }

    /// Forward pass over `n` row-major inputs.
    pub fn forward_batch(&self, x: &[f64], n: usize) -> Vec<f64> {
        self.forward_tape(x, n).acts.pop().unwrap()
    }

    pub fn forward_tape(&self, x: &[f64], n: usize) -> Tape {
        assert_eq!(x.len(), n * self.input_dim(), "input batch shape");
        let layers = self.dims.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let (w, b) = self.layer(l);
            let mut y = Vec::with_capacity(n * o);
            for _ in 0..n {
                y.extend_from_slice(&self.params[b..b + o]);
            }
            // y (n×o) += x (n×i) · Wᵀ (i×o)
            gemm(n, i, o, &acts[l], (i, 1), &self.params[w..b], (1, i), 1.0, &mut y);
            if l + 1 < layers {
                for v in &mut y {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(y);
        }
        Tape { n, acts }
    }

    /// Accumulates into `grad` the gradient of a scalar loss whose gradient
    /// with respect to the batch output is `d_out` (`n × out`, row-major).
    pub fn backward(&self, tape: &Tape, d_out: &[f64], grad: &mut [f64]) {
        let n = tape.n;
        assert_eq!(d_out.len(), n * self.output_dim());
        assert_eq!(grad.len(), self.params.len());
        let layers = self.dims.len() - 1;
        let mut dy = d_out.to_vec();
        for l in (0..layers).rev() {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let (w, b) = self.layer(l);
            let x = &tape.acts[l];
            // dW (o×i) += dyᵀ (o×n) · x (n×i)
            gemm(o, n, i, &dy, (1, o), x, (i, 1), 1.0, &mut grad[w..b]);
            for r in 0..n {
                for c in 0..o {
                    grad[b + c] += dy[r * o + c];
                }
            }
            if l > 0 {
                // dx (n×i) = dy (n×o) · W (o×i), masked by the ReLU.
                let mut dx = vec![0.0; n * i];
                gemm(n, o, i, &dy, (o, 1), &self.params[w..b], (i, 1), 0.0, &mut dx);
                for (d, a) in dx.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                dy = dx;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_zero_output() {
        let net = Mlp::zeros(&[5, 8, 8, 3]);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5, 3.0, 4.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn hand_built_path() {
        // in=2, hidden=2, out=1: h = relu([x0 - x1, -x0]), y = 2·h0 + 3·h1 + 0.5
        let params = vec![
            1.0, -1.0, -1.0, 0.0, // W1
            0.0, 0.0, // b1
            2.0, 3.0, // W2
            0.5, // b2
        ];
        let net = Mlp::from_params(&[2, 2, 1], params).unwrap();
        assert_eq!(net.forward(&[3.0, 1.0]).unwrap(), vec![2.0 * 2.0 + 0.5]);
        assert_eq!(net.forward(&[-1.0, 1.0]).unwrap(), vec![3.0 * 1.0 + 0.5]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let net = Mlp::zeros(&[4, 3, 2]);
        assert!(matches!(net.forward(&[1.0; 3]), Err(NetError::Dim { expected: 4, got: 3 })));
    }

    #[test]
    fn batch_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::init(&[6, 16, 16, 4], 1.0, &mut rng);
        let xs: Vec<f64> = (0..18).map(|k| (k as f64 * 0.71).sin()).collect();
        let batch = net.forward_batch(&xs, 3);
        for r in 0..3 {
            let single = net.forward(&xs[r * 6..(r + 1) * 6]).unwrap();
            for c in 0..4 {
                assert!((single[c] - batch[r * 4 + c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_net_quadratic_loss_gradient() {
        // y = W x + b, L = ½‖y‖² ⇒ dW = y xᵀ, db = y.
        let net = Mlp::from_params(&[2, 2], vec![1.0, 2.0, -0.5, 0.25, 0.1, -0.3]).unwrap();
        let x = [0.7, -1.3];
        let tape = net.forward_tape(&x, 1);
        let y = tape.output().to_vec();
        let mut g = vec![0.0; 6];
        net.backward(&tape, &y, &mut g);
        let expect = [y[0] * x[0], y[0] * x[1], y[1] * x[0], y[1] * x[1], y[0], y[1]];
        for (a, b) in g.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_init_has_orthonormal_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = orthogonal(8, 20, 1.0, &mut rng);
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..20).map(|k| w[a * 20 + k] * w[b * 20 + k]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_loss_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = Mlp::init(&[3, 8, 8, 2], 1.0, &mut rng);
        let tape = net.forward_tape(&[0.1, 0.2, 0.3], 1);
        let mut g = vec![0.0; net.params().len()];
        net.backward(&tape, &[0.0, 0.0], &mut g);
        assert!(g.iter().all(|v| *v == 0.0));
    }
}
