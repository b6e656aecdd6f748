//! One-bit gradient quantization and majority-vote aggregation.
//!
//! A client turns its gradient into a vector of signs after subtracting the
//! gradient's mean (optionally perturbed with clipped Gaussian noise for
//! differential privacy), packs the signs one bit per coordinate, and the
//! control centre takes the coordinate-wise sign of their sum.
//!
//! `sign(0)` is `+1` everywhere, including vote ties.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::rng::rng_from_seed;

/// A single sign, always `-1` or `+1`.
pub type Sign = i8;

#[inline]
pub fn sign(v: f64) -> Sign {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Subtracts the arithmetic mean, returning the centred vector and the mean.
pub fn normalize(g: &[f64]) -> Result<(Vec<f64>, f64)> {
    if g.is_empty() {
        return Err(Error::Empty("gradient"));
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("gradient entry {i} is not finite")));
    }
    let mu = g.iter().sum::<f64>() / g.len() as f64;
    Ok((g.iter().map(|v| v - mu).collect(), mu))
}

/// Gaussian-mechanism parameters for the noisy sign quantizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Per-coordinate clipping bound `C`.
    pub clip_norm: f64,
    pub enabled: bool,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            delta: 1e-5,
            clip_norm: 1.0,
            enabled: false,
        }
    }
}

impl DpConfig {
    /// `sigma = C * sqrt(2 ln(1.25 / delta)) / epsilon`.
    pub fn sigma(&self) -> f64 {
        self.clip_norm * (2.0 * (1.25 / self.delta).ln()).sqrt() / self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let bad = |what: &str| Err(Error::Config(format!("dp: {what}")));
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.clip_norm > 0.0 && self.clip_norm.is_finite()) {
            return bad("clip norm must be positive and finite");
        }
        let s = self.sigma();
        if !(s.is_finite() && s > 0.0) {
            return bad("noise scale is not a positive finite number");
        }
        Ok(())
    }
}

/// Sign quantizer. With DP enabled each coordinate is clipped to `[-C, C]`,
/// perturbed with `N(0, sigma^2)` noise drawn from `seed`, then signed.
pub fn dpsign(g: &[f64], dp: &DpConfig, seed: u64) -> Result<Vec<Sign>> {
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("gradient entry {i} is not finite")));
    }
    if !dp.enabled {
        return Ok(g.iter().map(|&v| sign(v)).collect());
    }
    dp.validate()?;
    let sigma = dp.sigma();
    let c = dp.clip_norm;
    let mut rng = rng_from_seed(seed);
    Ok(g.iter()
        .map(|&v| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            sign(v.clamp(-c, c) + sigma * noise)
        })
        .collect())
}

/// Bit-packed sign vector as sent uplink.
///
/// Parameter `8j + i` is bit `i` of byte `j`; a set bit means `+1`.
/// Unused trailing bits of the last byte are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignGradient {
    bits: Vec<u8>,
    dim: usize,
    pub client_id: u32,
    pub round: u32,
}

impl SignGradient {
    pub fn pack(signs: &[Sign], client_id: u32, round: u32) -> Result<Self> {
        let mut bits = vec![0u8; signs.len().div_ceil(8)];
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => bits[i / 8] |= 1 << (i % 8),
                -1 => {}
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "sign entry {i} is {other}, expected -1 or +1"
                    )))
                }
            }
        }
        Ok(Self {
            bits,
            dim: signs.len(),
            client_id,
            round,
        })
    }

    /// Rebuilds from raw payload bytes, rejecting a wrong length or stray
    /// trailing bits.
    pub fn from_bits(bits: Vec<u8>, dim: usize, client_id: u32, round: u32) -> Result<Self> {
        if bits.len() != dim.div_ceil(8) {
            return Err(Error::Shape {
                context: "sign payload bytes",
                expected: dim.div_ceil(8),
                actual: bits.len(),
            });
        }
        let tail = dim % 8;
        if tail != 0 && bits[bits.len() - 1] >> tail != 0 {
            return Err(Error::Data("sign payload has non-zero trailing bits".into()));
        }
        Ok(Self {
            bits,
            dim,
            client_id,
            round,
        })
    }

    pub fn unpack(&self) -> Vec<Sign> {
        (0..self.dim).map(|i| self.get(i)).collect()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Sign {
        if self.bits[i / 8] >> (i % 8) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Aggregated descent direction and the step size it is applied with.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateUpdate {
    pub g_mv: Vec<Sign>,
    pub eta: f64,
}

/// Coordinate-wise sign of the sum of the clients' signs.
pub fn majority_vote(updates: &[SignGradient], eta: f64) -> Result<AggregateUpdate> {
    let first = updates.first().ok_or(Error::Empty("majority vote input"))?;
    let dim = first.dim;
    for u in updates {
        if u.dim != dim {
            return Err(Error::Shape {
                context: "majority vote dimension",
                expected: dim,
                actual: u.dim,
            });
        }
        if u.round != first.round {
            return Err(Error::InvalidArgument(format!(
                "majority vote mixes rounds {} and {}",
                first.round, u.round
            )));
        }
    }
    // tally of +1 votes per coordinate
    let mut plus = vec![0u32; dim];
    for u in updates {
        for (j, &byte) in u.bits.iter().enumerate() {
            if byte == 0 {
                continue;
            }
            let base = j * 8;
            for b in 0..8 {
                if byte >> b & 1 == 1 {
                    plus[base + b] += 1;
                }
            }
        }
    }
    let k = updates.len() as u32;
    let g_mv = plus.into_iter().map(|p| if 2 * p >= k { 1 } else { -1 }).collect();
    Ok(AggregateUpdate { g_mv, eta })
}

/// `sign(sum_k g_k)` over full-precision gradients.
pub fn sign_of_sum(grads: &[Vec<f64>], eta: f64) -> Result<AggregateUpdate> {
    let first = grads.first().ok_or(Error::Empty("gradient aggregation input"))?;
    let mut sum = vec![0.0; first.len()];
    for g in grads {
        if g.len() != sum.len() {
            return Err(Error::Shape {
                context: "gradient aggregation dimension",
                expected: sum.len(),
                actual: g.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(g) {
            *s += v;
        }
    }
    Ok(AggregateUpdate {
        g_mv: sum.into_iter().map(sign).collect(),
        eta,
    })
}

/// `Z <- Z - eta * g_mv`.
pub fn apply_update(params: &ModelParams, agg: &AggregateUpdate) -> Result<ModelParams> {
    if agg.g_mv.len() != params.dim() {
        return Err(Error::Shape {
            context: "parameter update",
            expected: params.dim(),
            actual: agg.g_mv.len(),
        });
    }
    let flat = params
        .flat()
        .iter()
        .zip(&agg.g_mv)
        .map(|(&z, &s)| z - agg.eta * s as f64)
        .collect();
    params.with_flat(flat)
}
