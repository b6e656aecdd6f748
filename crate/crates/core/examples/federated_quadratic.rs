//! Four clients descend a shared quadratic with majority-vote sign SGD.

use feddisc::federation::{run_federation_with, EtaSchedule, FederationConfig};
use feddisc::synthetic::{flat_params, random_target, QuadraticClient};

fn main() -> feddisc::Result<()> {
    let target = random_target(16, 3);
    let clients: Vec<QuadraticClient> = (0..4).map(|k| QuadraticClient::new(k, target.clone())).collect();
    for normalize in [false, true] {
        let cfg = FederationConfig {
            clients: 4,
            rounds: 500,
            eta: EtaSchedule::Constant(0.01),
            normalize,
            ..Default::default()
        };
        let out = run_federation_with(&cfg, &clients, flat_params(vec![0.0; 16])?)?;
        let diff: Vec<f64> = out.params.flat().iter().zip(&target).map(|(z, t)| z - t).collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        let max_err = diff.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let max_centred = diff.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
        println!(
            "normalize={normalize}: F {:.4} -> {:.6}, max |z - z*| = {max_err:.4}, after removing the common offset {max_centred:.4}",
            out.rounds[0].global_loss, out.final_loss
        );
        for r in out.rounds.iter().step_by(100) {
            println!("  t={:3} F={:.5} uplink={} B", r.t, r.global_loss, r.uplink_bytes);
        }
    }
    Ok(())
}
