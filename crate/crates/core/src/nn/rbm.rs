use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::LayerSpec;
use crate::error::{Error, Result};
use crate::rng::{hash64, rng_from_seed};

const CD_BATCH: usize = 100;

/// Bernoulli-Bernoulli restricted Boltzmann machine.
///
/// `weights` is `visible x hidden`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Rbm {
    pub visible: usize,
    pub hidden: usize,
    pub weights: Vec<f64>,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Rbm {
    /// Small Gaussian weights (sd 0.01), zero biases.
    pub fn init(visible: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, 0.01).expect("valid normal");
        let weights = (0..visible * hidden).map(|_| normal.sample(&mut rng)).collect();
        Self {
            visible,
            hidden,
            weights,
            visible_bias: vec![0.0; visible],
            hidden_bias: vec![0.0; hidden],
        }
    }

    pub fn hidden_probs(&self, v: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let act: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, &vi)| vi * self.weights[i * self.hidden + j])
                    .sum();
                sigmoid(act + self.hidden_bias[j])
            })
            .collect()
    }

    pub fn visible_probs(&self, h: &[f64]) -> Vec<f64> {
        (0..self.visible)
            .map(|i| {
                let row = &self.weights[i * self.hidden..(i + 1) * self.hidden];
                let act: f64 = row.iter().zip(h).map(|(w, hj)| w * hj).sum();
                sigmoid(act + self.visible_bias[i])
            })
            .collect()
    }

    /// Mean-field reconstruction `v -> p(h|v) -> p(v|h)`.
    pub fn reconstruct(&self, v: &[f64]) -> Vec<f64> {
        self.visible_probs(&self.hidden_probs(v))
    }

    /// Mean binary cross-entropy between data rows and their mean-field
    /// reconstructions.
    pub fn reconstruction_cross_entropy(&self, data: &[Vec<f64>]) -> f64 {
        let eps = 1e-12;
        let total: f64 = data
            .iter()
            .map(|v| {
                let r = self.reconstruct(v);
                v.iter()
                    .zip(&r)
                    .map(|(&x, &p)| {
                        let p = p.clamp(eps, 1.0 - eps);
                        -(x * p.ln() + (1.0 - x) * (1.0 - p).ln())
                    })
                    .sum::<f64>()
                    / self.visible as f64
            })
            .sum();
        total / data.len().max(1) as f64
    }
}

/// Trains one RBM layer with single-step contrastive divergence.
///
/// Rows of `data` are visible-unit probabilities and must lie in `[0, 1]`.
/// With `epochs == 0` the seeded initialization is returned untouched.
pub fn cd1_pretrain(
    layer: &LayerSpec,
    data: &[Vec<f64>],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<Rbm> {
    for (r, row) in data.iter().enumerate() {
        if row.len() != layer.in_dim {
            return Err(Error::Shape {
                context: "rbm visible layer",
                expected: layer.in_dim,
                actual: row.len(),
            });
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "rbm data row {r} has value {v} outside [0, 1]"
            )));
        }
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidArgument(format!("rbm learning rate {lr}")));
    }

    let mut rbm = Rbm::init(layer.in_dim, layer.out_dim, seed);
    if epochs == 0 {
        return Ok(rbm);
    }
    if data.is_empty() {
        return Err(Error::Empty("rbm training data"));
    }

    let mut rng = rng_from_seed(hash64(&[seed, 0xCD1]));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let (nv, nh) = (rbm.visible, rbm.hidden);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(CD_BATCH) {
            let mut dw = vec![0.0; nv * nh];
            let mut dbv = vec![0.0; nv];
            let mut dbh = vec![0.0; nh];
            for &idx in chunk {
                let v0 = &data[idx];
                let h0 = rbm.hidden_probs(v0);
                let h0_sample: Vec<f64> = h0
                    .iter()
                    .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                    .collect();
                let v1 = rbm.visible_probs(&h0_sample);
                let h1 = rbm.hidden_probs(&v1);
                for i in 0..nv {
                    for j in 0..nh {
                        dw[i * nh + j] += v0[i] * h0[j] - v1[i] * h1[j];
                    }
                    dbv[i] += v0[i] - v1[i];
                }
                for j in 0..nh {
                    dbh[j] += h0[j] - h1[j];
                }
            }
            let scale = lr / chunk.len() as f64;
            for (w, d) in rbm.weights.iter_mut().zip(&dw) {
                *w += scale * d;
            }
            for (b, d) in rbm.visible_bias.iter_mut().zip(&dbv) {
                *b += scale * d;
            }
            for (b, d) in rbm.hidden_bias.iter_mut().zip(&dbh) {
                *b += scale * d;
            }
        }
    }
    Ok(rbm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    fn layer(v: usize, h: usize) -> LayerSpec {
        LayerSpec::new(v, h, Activation::Relu)
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let data = vec![vec![0.5; 4]; 3];
        let rbm = cd1_pretrain(&layer(4, 2), &data, 0, 0.1, 11).unwrap();
        assert_eq!(rbm, Rbm::init(4, 2, 11));
    }

    #[test]
    fn rejects_data_outside_unit_interval() {
        let data = vec![vec![0.5, 1.5]];
        assert!(matches!(
            cd1_pretrain(&layer(2, 2), &data, 1, 0.1, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn all_zero_data_suppresses_visible_units() {
        let data = vec![vec![0.0; 6]; 50];
        let rbm = cd1_pretrain(&layer(6, 3), &data, 300, 0.5, 3).unwrap();
        let recon = rbm.reconstruct(&data[0]);
        assert!(recon.iter().all(|&p| p < 0.1), "{recon:?}");
    }

    #[test]
    fn two_patterns_lower_cross_entropy() {
        let patterns = [vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]];
        let data: Vec<Vec<f64>> = (0..40).map(|i| patterns[i % 2].clone()).collect();
        let before = cd1_pretrain(&layer(4, 2), &data, 0, 0.1, 5)
            .unwrap()
            .reconstruction_cross_entropy(&data);
        let after = cd1_pretrain(&layer(4, 2), &data, 200, 0.1, 5)
            .unwrap()
            .reconstruction_cross_entropy(&data);
        assert!(after < before, "before {before}, after {after}");
    }

    #[test]
    fn deterministic_given_seed() {
        let data: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 3) as f64 / 2.0; 5]).collect();
        let a = cd1_pretrain(&layer(5, 3), &data, 10, 0.1, 9).unwrap();
        let b = cd1_pretrain(&layer(5, 3), &data, 10, 0.1, 9).unwrap();
        assert_eq!(a, b);
    }
}
