//! Centralised autoencoder training on natural rows, then reconstruction
//! errors of natural and attack rows.

use feddisc::data::PipelineConfig;
use feddisc::nn::{
    init_params, mean_loss, reconstruction_error, symmetric_autoencoder, train_sgd, Activation, InitScheme, Label,
    Loss, Sample,
};
use feddisc::synthetic::{anomaly_dataset, AnomalyConfig};

fn mean_error(params: &feddisc::nn::ModelParams, rows: &[&Sample]) -> feddisc::Result<f64> {
    let mut sum = 0.0;
    for s in rows {
        sum += reconstruction_error(params, &s.features)?;
    }
    Ok(sum / rows.len() as f64)
}

fn main() -> feddisc::Result<()> {
    let pipeline = PipelineConfig {
        pca_p: 0,
        ..Default::default()
    };
    let ds = anomaly_dataset(&AnomalyConfig::default(), &pipeline)?;
    let natural: Vec<Sample> = ds.train.iter().filter(|s| s.label == Label::Natural).cloned().collect();

    let spec = symmetric_autoencoder(ds.dim, &[24, 16, 8], Activation::Relu, Activation::Identity);
    let mut params = init_params(&spec, 1, InitScheme::UniformHe)?;
    println!("{} parameters, latent width {}", params.dim(), spec[params.latent_index()].out_dim);
    println!("initial loss {:.5}", mean_loss(&params, &natural, Loss::Reconstruction)?);
    for stage in 1..=4 {
        params = train_sgd(params, &natural, Loss::Reconstruction, 0.05, 64, 500, stage)?;
        println!("after {} steps: loss {:.5}", stage * 500, mean_loss(&params, &natural, Loss::Reconstruction)?);
    }

    let test_natural: Vec<&Sample> = ds.test.iter().filter(|s| s.label == Label::Natural).collect();
    let test_attack: Vec<&Sample> = ds.test.iter().filter(|s| s.label == Label::Attack).collect();
    println!("mean test error, natural: {:.5}", mean_error(&params, &test_natural)?);
    println!("mean test error, attack:  {:.5}", mean_error(&params, &test_attack)?);
    Ok(())
}
