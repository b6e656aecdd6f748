//! Control-centre / SCADA-client round loop.
//!
//! Each round: broadcast `Z^t` (full precision), every client computes a
//! local gradient on its own zone data, quantizes it to signs and sends it
//! back, then the control centre takes the majority vote and steps
//! `Z^{t+1} = Z^t - eta^t * g_mv`. With quantization disabled clients send
//! their raw gradients and the control centre uses `sign(sum_k g_k)`.
//!
//! Every client's randomness in round `t` comes from
//! `hash64(global_seed, zone_id, t)`, so the outcome does not depend on how
//! clients are scheduled across threads.

mod partition;

pub use partition::{partition_indices, partition_zones, PartitionScheme};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{backward, mean_loss, Loss, ModelParams, Sample};
use crate::quantizer::{apply_update, dpsign, majority_vote, normalize, sign_of_sum, DpConfig, SignGradient};
use crate::rng::{client_round_seed, hash64, rng_from_seed, SimRng};
use crate::wire;

const DP_STREAM: u64 = 0xD5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EtaSchedule {
    Constant(f64),
    /// `eta0 / sqrt(t + 1)`
    InverseSqrt(f64),
}

impl EtaSchedule {
    pub fn at(&self, t: u32) -> f64 {
        match *self {
            EtaSchedule::Constant(eta) => eta,
            EtaSchedule::InverseSqrt(eta0) => eta0 / ((t as f64) + 1.0).sqrt(),
        }
    }

    pub fn base(&self) -> f64 {
        match *self {
            EtaSchedule::Constant(e) | EtaSchedule::InverseSqrt(e) => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FederationConfig {
    pub clients: usize,
    pub rounds: u32,
    pub local_batches_per_round: usize,
    pub batch_size: usize,
    pub eta: EtaSchedule,
    pub dp: DpConfig,
    pub quantization_enabled: bool,
    /// Zero-mean normalization of each local gradient before signing.
    pub normalize: bool,
    pub global_seed: u64,
    pub loss: Loss,
    /// Worker threads for client computation; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            clients: 4,
            rounds: 300,
            local_batches_per_round: 1,
            batch_size: 100,
            eta: EtaSchedule::Constant(1e-3),
            dp: DpConfig::default(),
            quantization_enabled: true,
            normalize: true,
            global_seed: 42,
            loss: Loss::Reconstruction,
            threads: 0,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.clients == 0 {
            return bad("at least one client is required".into());
        }
        if self.local_batches_per_round == 0 {
            return bad("local_batches_per_round must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        let eta = self.eta.base();
        if !(eta > 0.0 && eta < 1.0) {
            return bad(format!("learning rate {eta} is outside (0, 1)"));
        }
        self.dp.validate()
    }
}

/// One SCADA sub-system's local training data.
#[derive(Clone, Debug, PartialEq)]
pub struct ZoneDataset {
    pub zone_id: u32,
    pub samples: Vec<Sample>,
}

impl ZoneDataset {
    pub fn new(zone_id: u32, samples: Vec<Sample>) -> Self {
        Self { zone_id, samples }
    }

    /// `N_k`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True when mini-batches of `batch_size` must be drawn with replacement.
    pub fn needs_replacement(&self, batch_size: usize) -> bool {
        self.samples.len() < batch_size
    }
}

/// What a client contributes to the federation.
pub trait LocalObjective: Sync {
    fn zone_id(&self) -> u32;
    /// `N_k`, the weight of this client in the global objective.
    fn num_samples(&self) -> usize;
    /// `f_k(Z)`.
    fn loss(&self, params: &ModelParams) -> Result<f64>;
    /// One stochastic gradient estimate drawn with `rng`.
    fn gradient(&self, params: &ModelParams, rng: &mut SimRng) -> Result<Vec<f64>>;
}

/// Neural client: mini-batch gradients of `loss` over its zone.
#[derive(Clone, Debug)]
pub struct ZoneClient {
    pub zone: ZoneDataset,
    pub loss: Loss,
    pub batch_size: usize,
}

impl ZoneClient {
    pub fn new(zone: ZoneDataset, loss: Loss, batch_size: usize) -> Result<Self> {
        if zone.is_empty() {
            return Err(Error::Data(format!("zone {} has no training samples", zone.zone_id)));
        }
        Ok(Self {
            zone,
            loss,
            batch_size,
        })
    }

    /// Indices of one mini-batch: without replacement when the zone is large
    /// enough, otherwise with replacement.
    pub fn draw_batch(&self, rng: &mut SimRng) -> Vec<usize> {
        let n = self.zone.len();
        if self.zone.needs_replacement(self.batch_size) {
            (0..self.batch_size).map(|_| rng.random_range(0..n)).collect()
        } else {
            index::sample(rng, n, self.batch_size).into_vec()
        }
    }
}

impl LocalObjective for ZoneClient {
    fn zone_id(&self) -> u32 {
        self.zone.zone_id
    }

    fn num_samples(&self) -> usize {
        self.zone.len()
    }

    fn loss(&self, params: &ModelParams) -> Result<f64> {
        mean_loss(params, &self.zone.samples, self.loss)
    }

    fn gradient(&self, params: &ModelParams, rng: &mut SimRng) -> Result<Vec<f64>> {
        let batch = self.draw_batch(rng);
        backward(params, batch.iter().map(|&i| &self.zone.samples[i]), self.loss)
    }
}

/// A client's uplink message.
#[derive(Clone, Debug, PartialEq)]
pub enum ClientUpdate {
    Signs(SignGradient),
    Dense(wire::DenseMessage),
}

impl ClientUpdate {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            ClientUpdate::Signs(g) => wire::encode_signs(g),
            ClientUpdate::Dense(m) => wire::encode_dense(m),
        }
    }
}

/// Client side of one round: averaged local gradient, then (when enabled)
/// zero-mean normalization and sign quantization.
pub fn local_round<C: LocalObjective + ?Sized>(
    client: &C,
    params: &ModelParams,
    cfg: &FederationConfig,
    round: u32,
) -> Result<ClientUpdate> {
    let seed = client_round_seed(cfg.global_seed, client.zone_id(), round);
    let mut rng = rng_from_seed(seed);
    let mut grad = client.gradient(params, &mut rng)?;
    if cfg.local_batches_per_round > 1 {
        for _ in 1..cfg.local_batches_per_round {
            let g = client.gradient(params, &mut rng)?;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / cfg.local_batches_per_round as f64;
        grad.iter_mut().for_each(|v| *v *= inv);
    }
    if !cfg.quantization_enabled {
        return Ok(ClientUpdate::Dense(wire::DenseMessage {
            round,
            client_id: client.zone_id(),
            values: grad,
        }));
    }
    let centred = if cfg.normalize { normalize(&grad)?.0 } else { grad };
    let signs = dpsign(&centred, &cfg.dp, hash64(&[seed, DP_STREAM]))?;
    Ok(ClientUpdate::Signs(SignGradient::pack(&signs, client.zone_id(), round)?))
}

/// Per-round log line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u32,
    /// `F(Z^t) = sum_k (N_k / N) f_k(Z^t)`.
    #[serde(rename = "F")]
    pub global_loss: f64,
    pub eta: f64,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    #[serde(rename = "f_k")]
    pub client_losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FederationOutcome {
    pub params: ModelParams,
    pub rounds: Vec<RoundRecord>,
    /// `F(Z^T)` after the last update.
    pub final_loss: f64,
    pub final_client_losses: Vec<f64>,
}

/// Weighted global objective and per-client losses.
pub fn global_loss<C: LocalObjective>(clients: &[C], params: &ModelParams) -> Result<(f64, Vec<f64>)> {
    let losses = clients.iter().map(|c| c.loss(params)).collect::<Result<Vec<_>>>()?;
    Ok((weighted(clients, &losses), losses))
}

fn weighted<C: LocalObjective>(clients: &[C], losses: &[f64]) -> f64 {
    let total: usize = clients.iter().map(|c| c.num_samples()).sum();
    clients
        .iter()
        .zip(losses)
        .map(|(c, l)| c.num_samples() as f64 / total as f64 * l)
        .sum()
}

/// Runs the round loop over the given zones with the standard neural client.
pub fn run_federation(
    cfg: &FederationConfig,
    zones: &[ZoneDataset],
    initial: ModelParams,
) -> Result<FederationOutcome> {
    let clients = zones
        .iter()
        .map(|z| ZoneClient::new(z.clone(), cfg.loss, cfg.batch_size))
        .collect::<Result<Vec<_>>>()?;
    run_federation_with(cfg, &clients, initial)
}

/// Runs the round loop over arbitrary client objectives.
pub fn run_federation_with<C: LocalObjective>(
    cfg: &FederationConfig,
    clients: &[C],
    initial: ModelParams,
) -> Result<FederationOutcome> {
    cfg.validate()?;
    if clients.len() != cfg.clients {
        return Err(Error::Config(format!(
            "configured for {} clients but {} zones were supplied",
            cfg.clients,
            clients.len()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let m = initial.dim();
    let mut params = initial;
    let mut rounds = Vec::with_capacity(cfg.rounds as usize);
    for t in 0..cfg.rounds {
        let eta = cfg.eta.at(t);

        // downlink
        let broadcast = wire::encode_dense(&wire::DenseMessage {
            round: t,
            client_id: u32::MAX,
            values: params.flat().to_vec(),
        });
        let received = params.with_flat(wire::decode_dense(&broadcast)?.values)?;
        let downlink_bytes = (broadcast.len() * clients.len()) as u64;

        // local training, quantization and uplink encoding
        let results: Vec<Result<(f64, Vec<u8>)>> = pool.install(|| {
            clients
                .par_iter()
                .map(|c| {
                    let f_k = c.loss(&received)?;
                    let update = local_round(c, &received, cfg, t)?;
                    Ok((f_k, update.encode()))
                })
                .collect()
        });
        let mut client_losses = Vec::with_capacity(clients.len());
        let mut messages = Vec::with_capacity(clients.len());
        for r in results {
            let (f_k, bytes) = r?;
            client_losses.push(f_k);
            messages.push(bytes);
        }
        let uplink_bytes: u64 = messages.iter().map(|b| b.len() as u64).sum();

        // aggregation
        let agg = if cfg.quantization_enabled {
            let grads = messages
                .iter()
                .map(|b| wire::decode_signs(b))
                .collect::<Result<Vec<_>>>()?;
            majority_vote(&grads, eta)?
        } else {
            let grads = messages
                .iter()
                .map(|b| wire::decode_dense(b).map(|d| d.values))
                .collect::<Result<Vec<_>>>()?;
            sign_of_sum(&grads, eta)?
        };
        if agg.g_mv.len() != m {
            return Err(Error::Shape {
                context: "aggregated update",
                expected: m,
                actual: agg.g_mv.len(),
            });
        }

        rounds.push(RoundRecord {
            t,
            global_loss: weighted(clients, &client_losses),
            eta,
            uplink_bytes,
            downlink_bytes,
            client_losses,
        });
        params = apply_update(&params, &agg)?;
    }

    let (final_loss, final_client_losses) = global_loss(clients, &params)?;
    Ok(FederationOutcome {
        params,
        rounds,
        final_loss,
        final_client_losses,
    })
}

/// Closed-form uplink bytes of one round.
pub fn expected_uplink_bytes(clients: usize, dim: usize, quantized: bool) -> u64 {
    let per = if quantized {
        wire::sign_message_len(dim)
    } else {
        wire::dense_message_len(dim)
    };
    (clients * per) as u64
}

/// Closed-form downlink bytes of one round.
pub fn expected_downlink_bytes(clients: usize, dim: usize) -> u64 {
    (clients * wire::dense_message_len(dim)) as u64
}

#[cfg(test)]
mod tests;
