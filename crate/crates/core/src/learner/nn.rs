//! Fully connected networks with ReLU hidden layers and analytic gradients.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Shape (inputs, outputs); rows are inputs.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Hidden layers use ReLU, the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

pub struct MlpCache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Grads {
    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|(w, b)| w.iter().chain(b.iter()).map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            *w *= s;
            *b *= s;
        }
    }

    /// Rescale so the global norm is at most `max_norm`.
    pub fn clip(&mut self, max_norm: f64) {
        let n = self.norm();
        if n > max_norm {
            self.scale(max_norm / n);
        }
    }
}

impl Mlp {
    /// Uniform fan-in init, U(−1/√fan_in, 1/√fan_in) for weights and biases.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let layers = sizes
            .windows(2)
            .map(|io| {
                let bound = 1.0 / (io[0] as f64).sqrt();
                Dense {
                    w: Array2::from_shape_fn((io[0], io[1]), |_| rng.random_range(-bound..bound)),
                    b: Array1::from_shape_fn(io[1], |_| rng.random_range(-bound..bound)),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|io| Dense { w: Array2::zeros((io[0], io[1])), b: Array1::zeros(io[1]) })
            .collect();
        Self { layers }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.w.nrows()).collect();
        s.extend(self.layers.last().map(|l| l.w.ncols()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").w.ncols()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.ncols() });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = x.dot(&self.layers[0].w) + &self.layers[0].b;
        for l in &self.layers[1..] {
            h.mapv_inplace(|v| v.max(0.0));
            h = h.dot(&l.w) + &l.b;
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let z = h.dot(&l.w) + &l.b;
            inputs.push(h);
            h = if i + 1 < self.layers.len() { z.mapv(|v| v.max(0.0)) } else { z };
        }
        Ok((h, MlpCache { inputs }))
    }

    /// Gradients of a scalar loss given dL/d(output). Also returns dL/d(input).
    pub fn backward(&self, cache: &MlpCache, grad_out: &Array2<f64>) -> (Grads, Array2<f64>) {
        let mut g = grad_out.clone();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            layers.push((input.t().dot(&g), g.sum_axis(Axis(0))));
            let mut gi = g.dot(&l.w.t());
            if i > 0 {
                // The cached input of layer i is the ReLU output of layer i−1.
                Zip::from(&mut gi).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            g = gi;
        }
        layers.reverse();
        (Grads { layers }, g)
    }

    fn check_shape(&self, other: &Mlp) -> Result<()> {
        if self.sizes() != other.sizes() {
            return Err(Error::ShapeMismatch);
        }
        Ok(())
    }

    /// self ← ξ·primary + (1−ξ)·self.
    pub fn soft_update_from(&mut self, primary: &Mlp, xi: f64) -> Result<()> {
        self.check_shape(primary)?;
        for (t, p) in self.layers.iter_mut().zip(&primary.layers) {
            Zip::from(&mut t.w).and(&p.w).for_each(|t, &p| *t = xi * p + (1.0 - xi) * *t);
            Zip::from(&mut t.b).and(&p.b).for_each(|t, &p| *t = xi * p + (1.0 - xi) * *t);
        }
        Ok(())
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Mlp) -> Result<f64> {
        self.check_shape(other)?;
        let mut m = 0.0f64;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            for (x, y) in a.w.iter().chain(a.b.iter()).zip(b.w.iter().chain(b.b.iter())) {
                m = m.max((x - y).abs());
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let zeros: Vec<_> = net
            .layers
            .iter()
            .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
            .collect();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros.clone(), v: zeros }
    }

    /// One descent step along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let lr_t = self.lr * (1.0 - b2.powi(self.t)).sqrt() / (1.0 - b1.powi(self.t));
        let eps = self.eps;
        for ((layer, (gw, gb)), ((mw, mb), (vw, vb))) in net
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            Zip::from(&mut layer.w).and(gw).and(mw).and(vw).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_t * *m / (v.sqrt() + eps);
            });
            Zip::from(&mut layer.b).and(gb).and(mb).and(vb).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_t * *m / (v.sqrt() + eps);
            });
        }
    }
}

/// Row-wise softmax of `logits / tau`.
pub fn softmax_rows(logits: &Array2<f64>, tau: f64) -> Array2<f64> {
    let mut y = logits / tau;
    for mut row in y.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    y
}

/// dL/d(logits) from dL/dy for y = softmax(logits / tau).
pub fn softmax_backward(y: &Array2<f64>, dy: &Array2<f64>, tau: f64) -> Array2<f64> {
    let dot = (y * dy).sum_axis(Axis(1)).insert_axis(Axis(1));
    (dy - &dot) * y / tau
}

/// Standard Gumbel samples, −ln(−ln U).
pub fn gumbel<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| {
        let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        -(-u.ln()).ln()
    })
}
