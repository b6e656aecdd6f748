//! Four non-IID zones train an autoencoder with one-bit gradients; the knee
//! of the sorted training errors becomes the attack threshold.

use feddisc::config::ExperimentConfig;
use feddisc::experiment::{evaluate_detector, train_detector};
use feddisc::synthetic::{anomaly_dataset, AnomalyConfig};

fn main() -> feddisc::Result<()> {
    let cfg = ExperimentConfig::from_text(
        "clients=4\nrounds=300\neta=0.001\nhidden=48,24,12\npca_p=0\npartition=dirichlet\ndirichlet_alpha=0.5\n",
    )?;
    let ds = anomaly_dataset(&AnomalyConfig::default(), &cfg.pipeline)?;
    println!("train {} rows, test {} rows, {} features", ds.train.len(), ds.test.len(), ds.dim);

    let trained = train_detector(&cfg, &ds)?;
    for r in trained.rounds.iter().step_by(50) {
        let f_k: Vec<String> = r.client_losses.iter().map(|f| format!("{f:.4}")).collect();
        println!("t={:3} F={:.5} f_k=[{}]", r.t, r.global_loss, f_k.join(", "));
    }
    println!("final F={:.5}", trained.final_loss);

    let ev = evaluate_detector(&cfg, &trained.model, None, &ds)?;
    let c = ev.report.confusion;
    let m = ev.report.metrics;
    println!("tau={:.5} (knee index {:?})", ev.threshold.tau, ev.threshold.index);
    println!("TP={} FP={} TN={} FN={}", c.tp, c.fp, c.tn, c.fn_);
    println!(
        "accuracy={:.4} precision={:.4} recall={:.4} f_score={:.4}",
        m.accuracy, m.precision, m.recall, m.f_score
    );
    Ok(())
}
