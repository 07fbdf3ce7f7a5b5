use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::math::{exp, sqrt, tanh};
use crate::rng::RngStream;

/// Discriminator outputs are clamped to `[D_CLAMP, 1 - D_CLAMP]`.
pub const D_CLAMP: f64 = 1e-7;

/// Fully connected layer, `y = W x + b` with `W` stored row-major
/// (`n_out` rows of `n_in`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Dense {
        Dense {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn xavier(n_in: usize, n_out: usize, rng: &mut RngStream) -> Dense {
        let a = sqrt(6.0 / (n_in + n_out) as f64);
        Dense {
            n_in,
            n_out,
            w: (0..n_in * n_out).map(|_| rng.uniform(-a, a)).collect(),
            b: vec![0.0; n_out],
        }
    }

    pub fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            *yo = self.b[o] + dot(row, x);
        }
    }

    /// Accumulate parameter gradients for upstream gradient `dy` at input
    /// `x` into `grad`; optionally write the input gradient to `dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        for (o, &g) in dy.iter().enumerate() {
            grad.b[o] += g;
            if g != 0.0 {
                let row = &mut grad.w[o * self.n_in..(o + 1) * self.n_in];
                for (r, xi) in row.iter_mut().zip(x) {
                    *r += g * xi;
                }
            }
        }
        if let Some(dx) = dx {
            dx.iter_mut().for_each(|v| *v = 0.0);
            for (o, &g) in dy.iter().enumerate() {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                for (d, w) in dx.iter_mut().zip(row) {
                    *d += g * w;
                }
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.w.iter().chain(&self.b)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.iter_mut().chain(self.b.iter_mut())
    }

    /// `self += k * other`.
    fn axpy(&mut self, k: f64, other: &Dense) {
        for (p, g) in self.params_mut().zip(other.params()) {
            *p += k * g;
        }
    }
}

/// Four interleaved partial sums, combined in a fixed order.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn tanh_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = tanh(*x));
}

fn flatten(layers: &[&Dense]) -> Vec<f64> {
    layers.iter().flat_map(|l| l.params().copied()).collect()
}

fn unflatten(layers: &mut [&mut Dense], flat: &[f64]) -> Result<(), LearnError> {
    let n: usize = layers.iter().map(|l| l.param_count()).sum();
    if flat.len() != n {
        return Err(LearnError::Dimension {
            expected: n,
            found: flat.len(),
        });
    }
    let mut it = flat.iter();
    for l in layers.iter_mut() {
        for p in l.params_mut() {
            *p = *it.next().expect("length checked");
        }
    }
    Ok(())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| exp(l - m)).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Trunk of two tanh layers producing the latent, then a linear softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub trunk1: Dense,
    pub trunk2: Dense,
    pub head: Dense,
}

/// Intermediate activations of one classifier forward pass.
#[derive(Debug, Clone)]
pub struct ClassifierTrace {
    pub hidden: Vec<f64>,
    pub latent: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Classifier {
    pub fn new(
        input: usize,
        hidden1: usize,
        hidden2: usize,
        classes: usize,
        rng: &mut RngStream,
    ) -> Classifier {
        Classifier {
            trunk1: Dense::xavier(input, hidden1, rng),
            trunk2: Dense::xavier(hidden1, hidden2, rng),
            head: Dense::xavier(hidden2, classes, rng),
        }
    }

    pub fn zeros_like(&self) -> Classifier {
        Classifier {
            trunk1: Dense::zeros(self.trunk1.n_in, self.trunk1.n_out),
            trunk2: Dense::zeros(self.trunk2.n_in, self.trunk2.n_out),
            head: Dense::zeros(self.head.n_in, self.head.n_out),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.trunk1.n_in
    }

    pub fn latent_dim(&self) -> usize {
        self.trunk2.n_out
    }

    pub fn classes(&self) -> usize {
        self.head.n_out
    }

    /// Layer widths: input, hidden, latent, classes.
    pub fn dims(&self) -> [usize; 4] {
        [
            self.trunk1.n_in,
            self.trunk1.n_out,
            self.trunk2.n_out,
            self.head.n_out,
        ]
    }

    pub(crate) fn trace(&self, x: &[f64]) -> ClassifierTrace {
        let mut hidden = vec![0.0; self.trunk1.n_out];
        self.trunk1.forward(x, &mut hidden);
        tanh_in_place(&mut hidden);
        let mut latent = vec![0.0; self.trunk2.n_out];
        self.trunk2.forward(&hidden, &mut latent);
        tanh_in_place(&mut latent);
        let mut logits = vec![0.0; self.head.n_out];
        self.head.forward(&latent, &mut logits);
        ClassifierTrace {
            hidden,
            latent,
            probs: softmax(&logits),
        }
    }

    /// Latent vector and class probabilities.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LearnError> {
        if x.len() != self.input_dim() {
            return Err(LearnError::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let t = self.trace(x);
        Ok((t.latent, t.probs))
    }

    pub fn param_count(&self) -> usize {
        self.trunk1.param_count() + self.trunk2.param_count() + self.head.param_count()
    }

    /// Parameters in layer order, each layer's weights then biases.
    pub fn flat(&self) -> Vec<f64> {
        flatten(&[&self.trunk1, &self.trunk2, &self.head])
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<(), LearnError> {
        unflatten(
            &mut [&mut self.trunk1, &mut self.trunk2, &mut self.head],
            flat,
        )
    }

    pub(crate) fn axpy(&mut self, k: f64, g: &Classifier) {
        self.trunk1.axpy(k, &g.trunk1);
        self.trunk2.axpy(k, &g.trunk2);
        self.head.axpy(k, &g.head);
    }

    /// Backpropagate a gradient on the logits and, optionally, an extra
    /// gradient on the latent.
    pub(crate) fn backward(
        &self,
        x: &[f64],
        t: &ClassifierTrace,
        dlogits: &[f64],
        extra_latent: Option<&[f64]>,
        grad: &mut Classifier,
    ) {
        let mut dz = vec![0.0; self.latent_dim()];
        self.head
            .backward(&t.latent, dlogits, &mut grad.head, Some(&mut dz));
        if let Some(extra) = extra_latent {
            for (d, e) in dz.iter_mut().zip(extra) {
                *d += e;
            }
        }
        for (d, z) in dz.iter_mut().zip(&t.latent) {
            *d *= 1.0 - z * z;
        }
        let mut dh = vec![0.0; self.trunk1.n_out];
        self.trunk2
            .backward(&t.hidden, &dz, &mut grad.trunk2, Some(&mut dh));
        for (d, h) in dh.iter_mut().zip(&t.hidden) {
            *d *= 1.0 - h * h;
        }
        self.trunk1.backward(x, &dh, &mut grad.trunk1, None);
    }
}

/// Two tanh hidden layers on the latent, logistic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub l1: Dense,
    pub l2: Dense,
    pub out: Dense,
}

pub(crate) struct DiscriminatorTrace {
    g1: Vec<f64>,
    g2: Vec<f64>,
    /// Clamped output.
    pub d: f64,
    /// Whether the clamp is active (zero gradient).
    pub clamped: bool,
}

impl Discriminator {
    pub fn new(latent: usize, hidden: usize, rng: &mut RngStream) -> Discriminator {
        Discriminator {
            l1: Dense::xavier(latent, hidden, rng),
            l2: Dense::xavier(hidden, hidden, rng),
            out: Dense::xavier(hidden, 1, rng),
        }
    }

    pub fn zeros_like(&self) -> Discriminator {
        Discriminator {
            l1: Dense::zeros(self.l1.n_in, self.l1.n_out),
            l2: Dense::zeros(self.l2.n_in, self.l2.n_out),
            out: Dense::zeros(self.out.n_in, 1),
        }
    }

    pub(crate) fn trace(&self, z: &[f64]) -> DiscriminatorTrace {
        let mut g1 = vec![0.0; self.l1.n_out];
        self.l1.forward(z, &mut g1);
        tanh_in_place(&mut g1);
        let mut g2 = vec![0.0; self.l2.n_out];
        self.l2.forward(&g1, &mut g2);
        tanh_in_place(&mut g2);
        let mut s = [0.0];
        self.out.forward(&g2, &mut s);
        let sigma = 1.0 / (1.0 + exp(-s[0]));
        let d = sigma.clamp(D_CLAMP, 1.0 - D_CLAMP);
        DiscriminatorTrace {
            g1,
            g2,
            d,
            clamped: d != sigma,
        }
    }

    /// Probability that latent `z` comes from the target domain.
    pub fn output(&self, z: &[f64]) -> f64 {
        self.trace(z).d
    }

    pub fn param_count(&self) -> usize {
        self.l1.param_count() + self.l2.param_count() + self.out.param_count()
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&[&self.l1, &self.l2, &self.out])
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<(), LearnError> {
        unflatten(&mut [&mut self.l1, &mut self.l2, &mut self.out], flat)
    }

    pub(crate) fn axpy(&mut self, k: f64, g: &Discriminator) {
        self.l1.axpy(k, &g.l1);
        self.l2.axpy(k, &g.l2);
        self.out.axpy(k, &g.out);
    }

    /// Backpropagate `dd` (gradient on the clamped output). Accumulates
    /// parameter gradients into `grad` when given and returns the latent
    /// gradient when `want_dz`.
    pub(crate) fn backward(
        &self,
        z: &[f64],
        t: &DiscriminatorTrace,
        dd: f64,
        grad: Option<&mut Discriminator>,
        want_dz: bool,
    ) -> Option<Vec<f64>> {
        // d sigma / ds = sigma (1 - sigma); zero where clamped
        let ds = if t.clamped {
            0.0
        } else {
            dd * t.d * (1.0 - t.d)
        };
        let mut scratch = Discriminator::zeros_like(self);
        let grad = grad.unwrap_or(&mut scratch);
        let mut dg2 = vec![0.0; self.l2.n_out];
        self.out
            .backward(&t.g2, &[ds], &mut grad.out, Some(&mut dg2));
        for (d, g) in dg2.iter_mut().zip(&t.g2) {
            *d *= 1.0 - g * g;
        }
        let mut dg1 = vec![0.0; self.l1.n_out];
        self.l2.backward(&t.g1, &dg2, &mut grad.l2, Some(&mut dg1));
        for (d, g) in dg1.iter_mut().zip(&t.g1) {
            *d *= 1.0 - g * g;
        }
        if want_dz {
            let mut dz = vec![0.0; self.l1.n_in];
            self.l1.backward(z, &dg1, &mut grad.l1, Some(&mut dz));
            Some(dz)
        } else {
            self.l1.backward(z, &dg1, &mut grad.l1, None);
            None
        }
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let mut f = Classifier::new(5, 4, 3, 4, &mut RngStream::new(0, 0));
        let zeros = vec![0.0; f.param_count()];
        f.load_flat(&zeros).unwrap();
        let (_, p) = f.forward(&[1.0, -2.0, 3.0, 0.5, 0.1]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = RngStream::new(7, 1);
        for _ in 0..50 {
            let f = Classifier::new(6, 5, 4, 3, &mut rng);
            let x: Vec<f64> = (0..6).map(|_| rng.normal() * 3.0).collect();
            let (_, p) = f.forward(&x).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = Classifier::new(3, 2, 2, 2, &mut RngStream::new(0, 0));
        assert_eq!(
            f.forward(&[1.0]).unwrap_err(),
            LearnError::Dimension {
                expected: 3,
                found: 1
            }
        );
    }

    #[test]
    fn tiny_network_matches_hand_arithmetic() {
        let mut f = Classifier::new(2, 2, 2, 2, &mut RngStream::new(0, 0));
        #[rustfmt::skip]
        f.load_flat(&[
            0.5, -0.25, 0.75, 1.0, 0.1, -0.2,
            1.0, 0.5, -0.5, 0.25, 0.0, 0.3,
            2.0, -1.0, 0.5, 1.5, 0.05, -0.05,
        ]).unwrap();
        let x = [0.4, -0.6];
        // by hand, layer by layer
        let h = [
            tanh(0.5 * 0.4 - 0.25 * -0.6 + 0.1),
            tanh(0.75 * 0.4 + 1.0 * -0.6 - 0.2),
        ];
        let z = [
            tanh(1.0 * h[0] + 0.5 * h[1]),
            tanh(-0.5 * h[0] + 0.25 * h[1] + 0.3),
        ];
        let l = [2.0 * z[0] - z[1] + 0.05, 0.5 * z[0] + 1.5 * z[1] - 0.05];
        let p0 = 1.0 / (1.0 + exp(l[1] - l[0]));
        let (latent, p) = f.forward(&x).unwrap();
        assert!((latent[0] - z[0]).abs() < 1e-15 && (latent[1] - z[1]).abs() < 1e-15);
        assert!((p[0] - p0).abs() < 1e-15 && (p[1] - (1.0 - p0)).abs() < 1e-15);
    }

    #[test]
    fn discriminator_output_is_inside_unit_interval() {
        let mut rng = RngStream::new(3, 3);
        let mut d = Discriminator::new(4, 3, &mut rng);
        for v in d.out.w.iter_mut() {
            *v *= 1e4;
        }
        for _ in 0..100 {
            let z: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let o = d.output(&z);
            assert!(o > 0.0 && o < 1.0);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.3, 0.3, 0.4]), 2);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
