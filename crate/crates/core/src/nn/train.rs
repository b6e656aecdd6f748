use rand::seq::SliceRandom;
use rand::Rng;

use super::{backward, layer_offsets, Activation, LayerSpec, Loss, ModelParams, Sample};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// One plain gradient step `Z <- Z - lr * grad`.
pub fn sgd_step(params: &mut ModelParams, batch: &[Sample], loss: Loss, lr: f64) -> Result<()> {
    let grad = backward(params, batch, loss)?;
    for (z, g) in params.flat_mut().iter_mut().zip(&grad) {
        *z -= lr * g;
    }
    Ok(())
}

/// Centralized mini-batch SGD, reshuffling every pass over the data.
pub fn train_sgd(
    mut params: ModelParams,
    data: &[Sample],
    loss: Loss,
    lr: f64,
    batch_size: usize,
    steps: usize,
    seed: u64,
) -> Result<ModelParams> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..steps {
        batch.clear();
        while batch.len() < batch_size.min(data.len()) {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(&data[order[cursor]]);
            cursor += 1;
        }
        let grad = backward(&params, batch.iter().copied(), loss)?;
        for (z, g) in params.flat_mut().iter_mut().zip(&grad) {
            *z -= lr * g;
        }
    }
    Ok(params)
}

/// Builds a classifier from the encoder half of an autoencoder plus a fresh
/// two-unit softmax layer on the latent code.
pub fn attach_softmax_head(autoencoder: &ModelParams, seed: u64) -> Result<ModelParams> {
    if autoencoder.has_softmax_head() {
        return Err(Error::InvalidArgument("model already has a softmax head".into()));
    }
    let latent = autoencoder.latent_index();
    let mut spec: Vec<LayerSpec> = autoencoder.spec()[..=latent].to_vec();
    let latent_dim = spec[latent].out_dim;
    spec.push(LayerSpec::new(latent_dim, 2, Activation::Softmax));

    let (_, last_bias) = layer_offsets(autoencoder.spec(), latent);
    let mut flat = autoencoder.flat()[..last_bias.end].to_vec();
    let mut rng = rng_from_seed(seed);
    let bound = (6.0 / latent_dim as f64).sqrt();
    flat.extend((0..latent_dim * 2).map(|_| rng.random_range(-bound..=bound)));
    flat.extend([0.0, 0.0]);
    ModelParams::new(spec, flat)
}
