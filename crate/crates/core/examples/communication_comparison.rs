//! The same federation with and without sign quantization: bytes on the
//! wire, rounds to a target loss and detection quality.

use feddisc::config::ExperimentConfig;
use feddisc::experiment::compare;
use feddisc::federation::expected_uplink_bytes;
use feddisc::synthetic::{anomaly_dataset, AnomalyConfig};

fn main() -> feddisc::Result<()> {
    let cfg = ExperimentConfig::from_text("rounds=150\neta=0.001\nhidden=48,24,8\npca_p=0\ntarget_loss=0.03\n")?;
    let ds = anomaly_dataset(&AnomalyConfig::default(), &cfg.pipeline)?;
    let (report, _) = compare(&cfg, &ds)?;
    print!("{}", report.to_text());

    let m = report.params;
    let k = cfg.federation.clients;
    let t = cfg.federation.rounds as u64;
    println!(
        "closed form: {} vs {} uplink bytes",
        t * expected_uplink_bytes(k, m, true),
        t * expected_uplink_bytes(k, m, false)
    );
    Ok(())
}
