use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-layer feed-forward net `W2 · relu(W1 · x + b1) + b2`, row-major.
///
/// The same type doubles as a gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) input: usize,
    pub(crate) hidden: usize,
    pub(crate) output: usize,
    pub(crate) seed: u64,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

pub(crate) struct Activations {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub out: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            seed: 0,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; output * hidden],
            b2: vec![0.0; output],
        }
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)` of their layer.
    pub fn init(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(input, hidden, output);
        net.seed = seed;
        let l1 = 1.0 / (input as f64).sqrt();
        let l2 = 1.0 / (hidden as f64).sqrt();
        for v in net.w1.iter_mut().chain(net.b1.iter_mut()) {
            *v = rng.random_range(-l1..=l1);
        }
        for v in net.w2.iter_mut().chain(net.b2.iter_mut()) {
            *v = rng.random_range(-l2..=l2);
        }
        net
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.input, self.hidden, self.output);
        z.seed = self.seed;
        z
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.input, self.hidden, self.output)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn forward(&self, x: &[f64]) -> Activations {
        debug_assert_eq!(x.len(), self.input);
        let mut pre = self.b1.clone();
        for (h, p) in pre.iter_mut().enumerate() {
            let row = &self.w1[h * self.input..(h + 1) * self.input];
            *p += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        let hidden: Vec<f64> = pre.iter().map(|&p| p.max(0.0)).collect();
        let mut out = self.b2.clone();
        for (o, v) in out.iter_mut().enumerate() {
            let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
            *v += row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        }
        Activations { pre, hidden, out }
    }

    /// Adds `d(loss)/d(params)` to `grad` given `d(loss)/d(outputs)`.
    pub(crate) fn backward(&self, x: &[f64], act: &Activations, d_out: &[f64], grad: &mut Mlp) {
        let mut d_hidden = vec![0.0; self.hidden];
        for (o, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.b2[o] += g;
            let row = o * self.hidden;
            for h in 0..self.hidden {
                grad.w2[row + h] += g * act.hidden[h];
                d_hidden[h] += g * self.w2[row + h];
            }
        }
        for h in 0..self.hidden {
            if act.pre[h] <= 0.0 || d_hidden[h] == 0.0 {
                continue;
            }
            let g = d_hidden[h];
            grad.b1[h] += g;
            let row = h * self.input;
            for (i, xi) in x.iter().enumerate() {
                grad.w1[row + i] += g * xi;
            }
        }
    }

    /// Pre-activations of the hidden layer, for kink checks in tests.
    pub fn hidden_pre_activations(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pre
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: f64, other: &Mlp) {
        for (a, b) in self.params_mut().zip(other.params()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.params_mut() {
            *a *= s;
        }
    }

    /// Parameters in block order W1, b1, W2, b2.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.params().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub(crate) fn softmax2(z: &[f64]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

pub(crate) fn log_softmax2(z: &[f64]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
