use rand::Rng;

use super::{cd1_pretrain, latent_index, layer_offsets, param_count, validate_spec, Activation, LayerSpec, ModelParams};
use crate::error::Result;
use crate::rng::{hash64, rng_from_seed};

/// How initial weights are chosen. Biases always start at zero.
#[derive(Clone, Copy, Debug)]
pub enum InitScheme<'a> {
    /// `U(-sqrt(6/in), sqrt(6/in))` per weight.
    UniformHe,
    /// Greedy layer-wise CD-1 on the encoder half; decoder layers that
    /// mirror an encoder layer reuse its weights transposed. Any other layer
    /// falls back to `UniformHe`.
    Cd1Pretrained {
        data: &'a [Vec<f64>],
        epochs: usize,
        lr: f64,
    },
}

pub fn he_bound(in_dim: usize) -> f64 {
    (6.0 / in_dim as f64).sqrt()
}

pub fn init_params(spec: &[LayerSpec], seed: u64, scheme: InitScheme<'_>) -> Result<ModelParams> {
    validate_spec(spec)?;
    let mut flat = vec![0.0; param_count(spec)];
    let mut rng = rng_from_seed(seed);
    for (i, layer) in spec.iter().enumerate() {
        let (w, _) = layer_offsets(spec, i);
        let bound = he_bound(layer.in_dim);
        for v in &mut flat[w] {
            *v = rng.random_range(-bound..=bound);
        }
    }

    if let InitScheme::Cd1Pretrained { data, epochs, lr } = scheme {
        let encoder_end = latent_index(spec);
        let mut layer_data: Vec<Vec<f64>> = data.to_vec();
        for i in 0..=encoder_end {
            let layer = spec[i];
            if layer.activation == Activation::Softmax {
                break;
            }
            let rbm = cd1_pretrain(&layer, &layer_data, epochs, lr, hash64(&[seed, i as u64]))?;
            let (w, _) = layer_offsets(spec, i);
            // encoder weights are out x in, the RBM stores visible x hidden
            let enc = &mut flat[w];
            for v in 0..rbm.visible {
                for h in 0..rbm.hidden {
                    enc[h * rbm.visible + v] = rbm.weights[v * rbm.hidden + h];
                }
            }
            let mirror = spec.len() - 1 - i;
            if mirror > encoder_end
                && spec[mirror].in_dim == layer.out_dim
                && spec[mirror].out_dim == layer.in_dim
                && spec[mirror].activation != Activation::Softmax
            {
                let (mw, _) = layer_offsets(spec, mirror);
                flat[mw].copy_from_slice(&rbm.weights);
            }
            layer_data = layer_data.iter().map(|v| rbm.hidden_probs(v)).collect();
        }
    }
    ModelParams::new(spec.to_vec(), flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::symmetric_autoencoder;

    fn spec() -> Vec<LayerSpec> {
        symmetric_autoencoder(10, &[6, 3], Activation::Relu, Activation::Relu)
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = init_params(&spec(), 4, InitScheme::UniformHe).unwrap();
        let b = init_params(&spec(), 4, InitScheme::UniformHe).unwrap();
        assert_eq!(a.flat(), b.flat());
    }

    #[test]
    fn different_seed_differs() {
        let a = init_params(&spec(), 4, InitScheme::UniformHe).unwrap();
        let b = init_params(&spec(), 5, InitScheme::UniformHe).unwrap();
        assert_ne!(a.flat(), b.flat());
    }

    #[test]
    fn he_bounds_and_zero_biases() {
        let s = spec();
        let p = init_params(&s, 1, InitScheme::UniformHe).unwrap();
        for (i, layer) in s.iter().enumerate() {
            let (w, b) = p.layer(i);
            let bound = (6.0 / layer.in_dim as f64).sqrt();
            assert!(w.iter().all(|v| v.abs() <= bound));
            assert!(b.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn cd1_mirrors_encoder_weights_into_decoder() {
        let s = spec();
        let data: Vec<Vec<f64>> = (0..30)
            .map(|r| (0..10).map(|c| ((r * 7 + c * 3) % 11) as f64 / 10.0).collect())
            .collect();
        let scheme = InitScheme::Cd1Pretrained {
            data: &data,
            epochs: 3,
            lr: 0.1,
        };
        let p = init_params(&s, 2, scheme).unwrap();
        let q = init_params(&s, 2, scheme).unwrap();
        assert_eq!(p.flat(), q.flat());
        // layer 0 is 10->6 (6x10), layer 3 is 6->10 (10x6) = transpose
        let (enc, _) = p.layer(0);
        let (dec, _) = p.layer(3);
        for o in 0..6 {
            for i in 0..10 {
                assert_eq!(enc[o * 10 + i], dec[i * 6 + o]);
            }
        }
        assert!(p.layer(0).1.iter().all(|&b| b == 0.0));
    }
}
