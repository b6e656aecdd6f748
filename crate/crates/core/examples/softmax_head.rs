//! Threshold detector and a federated softmax head on the same encoder.

use feddisc::config::ExperimentConfig;
use feddisc::experiment::{evaluate_detector, train_detector};
use feddisc::synthetic::{anomaly_dataset, AnomalyConfig};

fn main() -> feddisc::Result<()> {
    let cfg = ExperimentConfig::from_text(
        "rounds=300\neta=0.001\nhidden=24,16,8\npca_p=0\nsoftmax_head=true\nhead_rounds=200\nhead_eta=0.002\n",
    )?;
    let ds = anomaly_dataset(&AnomalyConfig::default(), &cfg.pipeline)?;
    let t = train_detector(&cfg, &ds)?;
    let (head, head_rounds) = t.head.as_ref().expect("head configured");
    println!(
        "head cross-entropy {:.4} -> {:.4}",
        head_rounds[0].global_loss,
        head_rounds.last().map(|r| r.global_loss).unwrap_or(f64::NAN)
    );
    let ev = evaluate_detector(&cfg, &t.model, Some(head), &ds)?;
    let th = ev.report.metrics;
    println!("threshold: accuracy {:.4} precision {:.4} recall {:.4}", th.accuracy, th.precision, th.recall);
    if let Some(sm) = ev.softmax {
        let m = sm.metrics;
        println!("softmax:   accuracy {:.4} precision {:.4} recall {:.4}", m.accuracy, m.precision, m.recall);
    }
    Ok(())
}
