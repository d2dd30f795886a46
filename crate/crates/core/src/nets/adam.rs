/// Adaptive-moment gradient descent with the usual default coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_along_sign() {
        let mut opt = Adam::new(2);
        let mut p = [1.0, 1.0];
        opt.step(&mut p, &[3.0, -0.2], 0.01);
        assert!((p[0] - 0.99).abs() < 1e-8);
        assert!((p[1] - 1.01).abs() < 1e-8);
    }

    #[test]
    fn zero_lr_is_a_no_op() {
        let mut opt = Adam::new(3);
        let mut p = [0.5, -0.25, 2.0];
        opt.step(&mut p, &[1.0, 2.0, 3.0], 0.0);
        assert_eq!(p, [0.5, -0.25, 2.0]);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut opt = Adam::new(1);
        let mut p = [5.0];
        for _ in 0..5000 {
            let g = [2.0 * (p[0] - 1.5)];
            opt.step(&mut p, &g, 0.01);
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }
}
