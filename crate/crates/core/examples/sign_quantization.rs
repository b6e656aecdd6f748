//! One client's gradient through normalization, the noisy sign quantizer,
//! bit packing and the wire format, then a three-client majority vote.

use feddisc::nn::{Activation, LayerSpec, ModelParams};
use feddisc::quantizer::{apply_update, dpsign, majority_vote, normalize, DpConfig, SignGradient};
use feddisc::wire;

fn main() -> feddisc::Result<()> {
    let gradient = [0.8, -0.1, 0.35, 0.05, -0.6, 0.2, 0.0, 0.4, -0.25, 0.1];
    let (centred, mu) = normalize(&gradient)?;
    println!("mean removed: {mu:.3}");

    let plain = DpConfig::default();
    let noisy = DpConfig {
        enabled: true,
        epsilon: 2.0,
        ..Default::default()
    };
    println!("sigma at epsilon=2: {:.3}", noisy.sigma());

    let mut updates = Vec::new();
    for client in 0..3u32 {
        let dp = if client == 0 { plain } else { noisy };
        let signs = dpsign(&centred, &dp, 1000 + client as u64)?;
        let packed = SignGradient::pack(&signs, client, 0)?;
        let bytes = wire::encode_signs(&packed);
        println!("client {client}: signs {signs:?} -> {} bytes on the wire", bytes.len());
        updates.push(wire::decode_signs(&bytes)?);
    }
    let dense = wire::dense_message_len(gradient.len());
    println!("full-precision message would be {dense} bytes");

    let agg = majority_vote(&updates, 0.01)?;
    println!("vote: {:?}", agg.g_mv);

    let params = ModelParams::zeros(vec![LayerSpec::new(9, 1, Activation::Identity)])?;
    let next = apply_update(&params, &agg)?;
    println!("parameters after one step: {:?}", next.flat());
    Ok(())
}
