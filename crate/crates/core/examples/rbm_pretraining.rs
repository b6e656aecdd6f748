//! Greedy CD-1 pretraining of the encoder compared with a uniform random
//! start, both followed by the same federated training.

use feddisc::config::ExperimentConfig;
use feddisc::experiment::{evaluate_detector, train_detector};
use feddisc::nn::{cd1_pretrain, Activation, Label, LayerSpec};
use feddisc::synthetic::{anomaly_dataset, AnomalyConfig};

fn main() -> feddisc::Result<()> {
    let base = "rounds=200\neta=0.001\nhidden=24,16,8\npca_p=0\n";
    let he = ExperimentConfig::from_text(base)?;
    let ds = anomaly_dataset(&AnomalyConfig::default(), &he.pipeline)?;

    let rows: Vec<Vec<f64>> = ds.train.iter().filter(|s| s.label == Label::Natural).map(|s| s.features.clone()).collect();
    let layer = LayerSpec::new(ds.dim, 24, Activation::Relu);
    for epochs in [0, 1, 5] {
        let rbm = cd1_pretrain(&layer, &rows, epochs, 0.05, 9)?;
        println!("first RBM after {epochs} epochs: reconstruction cross-entropy {:.4}", rbm.reconstruction_cross_entropy(&rows));
    }

    let cd1 = ExperimentConfig::from_text(&format!("{base}init=cd1\ncd1_epochs=5\ncd1_lr=0.05\n"))?;
    for (name, cfg) in [("he", &he), ("cd1", &cd1)] {
        let t = train_detector(cfg, &ds)?;
        let ev = evaluate_detector(cfg, &t.model, None, &ds)?;
        println!(
            "{name}: F {:.5} -> {:.5}, test accuracy {:.4}",
            t.rounds[0].global_loss, t.final_loss, ev.report.metrics.accuracy
        );
    }
    Ok(())
}
