use super::*;
use crate::nn::{init_params, symmetric_autoencoder, Activation, InitScheme, Label};
use crate::quantizer::sign;
use crate::synthetic::{flat_params, random_target, QuadraticClient};

fn zone(zone_id: u32, n: usize, seed: u64) -> ZoneDataset {
    let mut rng = rng_from_seed(seed);
    ZoneDataset::new(
        zone_id,
        (0..n)
            .map(|_| Sample::new((0..4).map(|_| rng.random::<f64>()).collect(), Label::Natural))
            .collect(),
    )
}

fn autoencoder(seed: u64) -> ModelParams {
    let spec = symmetric_autoencoder(4, &[3, 2], Activation::Relu, Activation::Identity);
    init_params(&spec, seed, InitScheme::UniformHe).unwrap()
}

fn cfg(clients: usize, rounds: u32) -> FederationConfig {
    FederationConfig {
        clients,
        rounds,
        batch_size: 8,
        eta: EtaSchedule::Constant(0.01),
        ..Default::default()
    }
}

#[test]
fn dense_local_round_is_plain_backward() {
    let client = ZoneClient::new(zone(2, 30, 1), Loss::Reconstruction, 8).unwrap();
    let params = autoencoder(0);
    let c = FederationConfig {
        quantization_enabled: false,
        ..cfg(1, 1)
    };
    let ClientUpdate::Dense(msg) = local_round(&client, &params, &c, 5).unwrap() else {
        panic!("expected a dense update");
    };
    let mut rng = rng_from_seed(client_round_seed(c.global_seed, 2, 5));
    let batch = client.draw_batch(&mut rng);
    let g = backward(&params, batch.iter().map(|&i| &client.zone.samples[i]), Loss::Reconstruction).unwrap();
    assert_eq!(msg.values, g);
    assert_eq!((msg.round, msg.client_id), (5, 2));
}

#[test]
fn identical_clients_identical_signs() {
    let a = ZoneClient::new(zone(1, 30, 4), Loss::Reconstruction, 8).unwrap();
    let b = a.clone();
    let params = autoencoder(1);
    let c = cfg(2, 1);
    assert_eq!(
        local_round(&a, &params, &c, 3).unwrap(),
        local_round(&b, &params, &c, 3).unwrap()
    );
}

#[test]
fn quantized_round_composes_normalize_and_dpsign() {
    let client = ZoneClient::new(zone(3, 50, 2), Loss::Reconstruction, 8).unwrap();
    let params = autoencoder(2);
    let mut c = cfg(1, 1);
    c.local_batches_per_round = 3;
    c.dp = DpConfig {
        enabled: true,
        epsilon: 50.0,
        ..Default::default()
    };
    let ClientUpdate::Signs(got) = local_round(&client, &params, &c, 7).unwrap() else {
        panic!("expected signs");
    };

    let seed = client_round_seed(c.global_seed, 3, 7);
    let mut rng = rng_from_seed(seed);
    let mut sum = vec![0.0; params.dim()];
    for _ in 0..3 {
        let batch = client.draw_batch(&mut rng);
        let g = backward(&params, batch.iter().map(|&i| &client.zone.samples[i]), Loss::Reconstruction).unwrap();
        sum.iter_mut().zip(&g).for_each(|(s, v)| *s += v);
    }
    let avg: Vec<f64> = sum.iter().map(|s| s * (1.0 / 3.0)).collect();
    let (centred, _) = normalize(&avg).unwrap();
    let want = dpsign(&centred, &c.dp, hash64(&[seed, DP_STREAM])).unwrap();
    assert_eq!(got.unpack(), want);
}

#[test]
fn zero_rounds_returns_initial() {
    let params = autoencoder(3);
    let out = run_federation(&cfg(1, 0), &[zone(0, 10, 0)], params.clone()).unwrap();
    assert_eq!(out.params, params);
    assert!(out.rounds.is_empty());
}

#[test]
fn single_dense_client_is_sign_sgd() {
    let c = FederationConfig {
        quantization_enabled: false,
        ..cfg(1, 25)
    };
    let z = zone(0, 40, 9);
    let initial = autoencoder(4);
    let out = run_federation(&c, std::slice::from_ref(&z), initial.clone()).unwrap();

    let client = ZoneClient::new(z, Loss::Reconstruction, 8).unwrap();
    let mut flat = initial.flat().to_vec();
    for t in 0..25 {
        let p = initial.with_flat(flat.clone()).unwrap();
        let mut rng = rng_from_seed(client_round_seed(c.global_seed, 0, t));
        let batch = client.draw_batch(&mut rng);
        let g = backward(&p, batch.iter().map(|&i| &client.zone.samples[i]), Loss::Reconstruction).unwrap();
        for (z, gi) in flat.iter_mut().zip(&g) {
            *z -= 0.01 * sign(*gi) as f64;
        }
    }
    assert_eq!(out.params.flat(), flat.as_slice());
}

fn toy_run(normalize: bool) -> (Vec<f64>, Vec<f64>) {
    let target = random_target(16, 99);
    let clients: Vec<QuadraticClient> = (0..4).map(|k| QuadraticClient::new(k, target.clone())).collect();
    let c = FederationConfig {
        clients: 4,
        rounds: 500,
        eta: EtaSchedule::Constant(0.01),
        normalize,
        ..Default::default()
    };
    let out = run_federation_with(&c, &clients, flat_params(vec![0.0; 16]).unwrap()).unwrap();
    (out.params.into_flat(), target)
}

#[test]
fn toy_quadratic_converges() {
    let (z, target) = toy_run(false);
    let err = z.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 0.05, "{err}");
}

#[test]
fn toy_quadratic_converges_up_to_common_offset_when_normalized() {
    let (z, target) = toy_run(true);
    let diff: Vec<f64> = z.iter().zip(&target).map(|(a, b)| a - b).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    let err = diff.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
    assert!(err < 0.05, "{err}");
}

#[test]
fn deterministic_across_thread_counts() {
    let zones: Vec<ZoneDataset> = (0..3).map(|k| zone(k, 20 + k as usize, k as u64)).collect();
    let mut c = cfg(3, 12);
    c.dp.enabled = true;
    c.threads = 1;
    let a = run_federation(&c, &zones, autoencoder(5)).unwrap();
    c.threads = 4;
    let b = run_federation(&c, &zones, autoencoder(5)).unwrap();
    assert_eq!(a, b);
    let again = run_federation(&c, &zones, autoencoder(5)).unwrap();
    assert_eq!(a, again);
}

#[test]
fn byte_accounting_matches_closed_form() {
    let zones: Vec<ZoneDataset> = (0..2).map(|k| zone(k, 15, k as u64)).collect();
    let initial = autoencoder(6);
    let m = initial.dim();
    for quantized in [true, false] {
        let c = FederationConfig {
            quantization_enabled: quantized,
            ..cfg(2, 3)
        };
        let out = run_federation(&c, &zones, initial.clone()).unwrap();
        for r in &out.rounds {
            assert_eq!(r.uplink_bytes, expected_uplink_bytes(2, m, quantized));
            assert_eq!(r.downlink_bytes, expected_downlink_bytes(2, m));
        }
    }
    assert_eq!(expected_uplink_bytes(4, 1000, true), 4 * (16 + 125));
    assert_eq!(expected_uplink_bytes(4, 1000, false), 4 * (16 + 8000));
}

#[test]
fn round_log_fields() {
    let zones = vec![zone(0, 10, 0), zone(1, 30, 1)];
    let out = run_federation(&cfg(2, 2), &zones, autoencoder(7)).unwrap();
    let r = &out.rounds[1];
    let weighted = (10.0 * r.client_losses[0] + 30.0 * r.client_losses[1]) / 40.0;
    assert!((r.global_loss - weighted).abs() < 1e-12);
    let json = serde_json::to_value(r).unwrap();
    for key in ["t", "F", "eta", "uplink_bytes", "downlink_bytes", "f_k"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn inverse_sqrt_schedule_decreases() {
    let s = EtaSchedule::InverseSqrt(0.5);
    let mut prev = s.at(0);
    assert!(prev > 0.0 && prev < 1.0);
    for t in 1..1000 {
        let e = s.at(t);
        assert!(e < prev && e > 0.0);
        prev = e;
    }
}

#[test]
fn config_errors() {
    let mut c = cfg(1, 1);
    c.eta = EtaSchedule::Constant(1.0);
    assert!(c.validate().is_err());
    assert!(run_federation(&cfg(2, 1), &[zone(0, 5, 0)], autoencoder(0)).is_err());
    assert!(ZoneClient::new(ZoneDataset::new(0, vec![]), Loss::Reconstruction, 4).is_err());
}

#[test]
fn small_zone_samples_with_replacement() {
    let client = ZoneClient::new(zone(0, 3, 0), Loss::Reconstruction, 8).unwrap();
    assert!(client.zone.needs_replacement(8));
    let batch = client.draw_batch(&mut rng_from_seed(1));
    assert_eq!(batch.len(), 8);
    assert!(batch.iter().all(|&i| i < 3));
}

#[test]
fn training_reduces_global_loss() {
    let zones: Vec<ZoneDataset> = (0..4).map(|k| zone(k, 60, 10 + k as u64)).collect();
    let initial = autoencoder(8);
    let c = FederationConfig {
        rounds: 150,
        ..cfg(4, 150)
    };
    let out = run_federation(&c, &zones, initial).unwrap();
    assert!(out.final_loss < out.rounds[0].global_loss);
}
