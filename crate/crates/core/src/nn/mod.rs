//! Dense feed-forward autoencoder with hand-written backpropagation.
//!
//! Parameters live in one flat vector (the vector exchanged during
//! federated training). For every layer the weight matrix is stored
//! row-major with shape `out_dim x in_dim`, followed by its `out_dim` bias
//! entries; layers are concatenated in declaration order.

mod file;
mod init;
mod rbm;
mod train;

pub use file::{decode_model, encode_model, read_model, write_model};
pub use init::{init_params, InitScheme};
pub use rbm::{cd1_pretrain, Rbm};
pub use train::{attach_softmax_head, sgd_step, train_sgd};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
    Softmax,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
            Activation::Softmax => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            2 => Some(Activation::Softmax),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Checks that layers are non-empty, chain, and that softmax only appears
/// as the final layer.
pub fn validate_spec(spec: &[LayerSpec]) -> Result<()> {
    if spec.is_empty() {
        return Err(Error::InvalidArgument("network has no layers".into()));
    }
    for (i, layer) in spec.iter().enumerate() {
        if layer.in_dim == 0 || layer.out_dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "layer {i} has a zero dimension"
            )));
        }
        if layer.activation == Activation::Softmax && i + 1 != spec.len() {
            return Err(Error::InvalidArgument(format!(
                "softmax is only allowed on the final layer (found on layer {i})"
            )));
        }
        if let Some(next) = spec.get(i + 1) {
            if layer.out_dim != next.in_dim {
                return Err(Error::InvalidArgument(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    layer.out_dim,
                    i + 1,
                    next.in_dim
                )));
            }
        }
    }
    Ok(())
}

pub fn param_count(spec: &[LayerSpec]) -> usize {
    spec.iter().map(LayerSpec::param_count).sum()
}

/// Mirrored encoder/decoder stack: `input -> hidden[0] -> ... -> hidden[n-1]`
/// followed by the reverse path back to `input`.
///
/// Every layer uses `hidden_act` except the last decoder layer, which uses
/// `output_act`.
pub fn symmetric_autoencoder(
    input_dim: usize,
    hidden: &[usize],
    hidden_act: Activation,
    output_act: Activation,
) -> Vec<LayerSpec> {
    let mut widths = vec![input_dim];
    widths.extend_from_slice(hidden);
    let mut layers: Vec<LayerSpec> = widths
        .windows(2)
        .map(|w| LayerSpec::new(w[0], w[1], hidden_act))
        .collect();
    let decoder: Vec<LayerSpec> = widths
        .windows(2)
        .rev()
        .map(|w| LayerSpec::new(w[1], w[0], hidden_act))
        .collect();
    layers.extend(decoder);
    if let Some(last) = layers.last_mut() {
        last.activation = output_act;
    }
    layers
}

/// Default encoder widths below a 100-dimensional input.
pub const DEFAULT_HIDDEN: [usize; 5] = [64, 48, 32, 24, 16];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Natural,
    Attack,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Natural => 0,
            Label::Attack => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::Natural),
            1 => Some(Label::Attack),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Natural => "Natural",
            Label::Attack => "Attack",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
    /// Index of the source file the row came from (0 when unknown).
    #[serde(default)]
    pub source: u32,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Self {
            features,
            label,
            source: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    spec: Vec<LayerSpec>,
    flat: Vec<f64>,
}

impl ModelParams {
    pub fn new(spec: Vec<LayerSpec>, flat: Vec<f64>) -> Result<Self> {
        validate_spec(&spec)?;
        let expected = param_count(&spec);
        if flat.len() != expected {
            return Err(Error::Shape {
                context: "parameter vector",
                expected,
                actual: flat.len(),
            });
        }
        if let Some(i) = flat.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "parameter {i} is not finite"
            )));
        }
        Ok(Self { spec, flat })
    }

    pub fn zeros(spec: Vec<LayerSpec>) -> Result<Self> {
        let m = param_count(&spec);
        Self::new(spec, vec![0.0; m])
    }

    pub fn spec(&self) -> &[LayerSpec] {
        &self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }

    /// Replaces the parameter vector, keeping the architecture.
    pub fn with_flat(&self, flat: Vec<f64>) -> Result<Self> {
        Self::new(self.spec.clone(), flat)
    }

    /// Number of scalar parameters (M).
    pub fn dim(&self) -> usize {
        self.flat.len()
    }

    pub fn input_dim(&self) -> usize {
        self.spec[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec[self.spec.len() - 1].out_dim
    }

    pub fn has_softmax_head(&self) -> bool {
        self.spec[self.spec.len() - 1].activation == Activation::Softmax
    }

    /// Index of the layer whose output is the latent code: the first
    /// narrowest layer.
    pub fn latent_index(&self) -> usize {
        latent_index(&self.spec)
    }

    /// Offsets of layer `i`'s weights and biases inside the flat vector.
    pub fn layer_offsets(&self, i: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        layer_offsets(&self.spec, i)
    }

    pub(crate) fn layer(&self, i: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.layer_offsets(i);
        (&self.flat[w], &self.flat[b])
    }
}

pub(crate) fn latent_index(spec: &[LayerSpec]) -> usize {
    let mut best = 0;
    for (i, l) in spec.iter().enumerate() {
        if l.out_dim < spec[best].out_dim {
            best = i;
        }
    }
    best
}

pub(crate) fn layer_offsets(
    spec: &[LayerSpec],
    i: usize,
) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let start: usize = spec[..i].iter().map(LayerSpec::param_count).sum();
    let l = spec[i];
    let w_end = start + l.in_dim * l.out_dim;
    (start..w_end, w_end..w_end + l.out_dim)
}

/// Per-layer pre-activations and activations of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
    pub latent_index: usize,
}

impl ForwardTrace {
    pub fn latent(&self) -> &[f64] {
        &self.post[self.latent_index]
    }

    /// Network output; the reconstruction for an autoencoder.
    pub fn output(&self) -> &[f64] {
        &self.post[self.post.len() - 1]
    }

    pub fn reconstruction(&self) -> &[f64] {
        self.output()
    }

    fn layer_input(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.input
        } else {
            &self.post[i - 1]
        }
    }
}

fn affine(weights: &[f64], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let in_dim = x.len();
    bias.iter()
        .enumerate()
        .map(|(r, &b)| {
            let row = &weights[r * in_dim..(r + 1) * in_dim];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn activate(act: Activation, z: &[f64]) -> Vec<f64> {
    match act {
        Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
        Activation::Identity => z.to_vec(),
        Activation::Softmax => softmax(z),
    }
}

/// Elementwise derivative for ReLU / identity. ReLU'(0) is taken as 0.
#[inline]
fn elementwise_grad(act: Activation, z: f64) -> f64 {
    match act {
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Identity => 1.0,
        Activation::Softmax => unreachable!("softmax has no elementwise derivative"),
    }
}

pub fn forward(params: &ModelParams, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != params.input_dim() {
        return Err(Error::Shape {
            context: "forward input",
            expected: params.input_dim(),
            actual: x.len(),
        });
    }
    let n = params.spec.len();
    let mut pre = Vec::with_capacity(n);
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, layer) in params.spec.iter().enumerate() {
        let (w, b) = params.layer(i);
        let input = if i == 0 { x } else { &post[i - 1] };
        let z = affine(w, b, input);
        let a = activate(layer.activation, &z);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                layer: i,
                stage: "forward",
            });
        }
        pre.push(z);
        post.push(a);
    }
    Ok(ForwardTrace {
        input: x.to_vec(),
        pre,
        post,
        latent_index: params.latent_index(),
    })
}

/// Mean squared error between an input and its reconstruction.
pub fn mse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Shape {
            context: "mse operands",
            expected: x.len(),
            actual: x_hat.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Empty("mse operands"));
    }
    let sum: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x.len() as f64)
}

/// Reconstruction error of one input under the model.
pub fn reconstruction_error(params: &ModelParams, x: &[f64]) -> Result<f64> {
    let trace = forward(params, x)?;
    mse(x, trace.output())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    /// MSE between the network output and its own input.
    Reconstruction,
    /// Cross-entropy of a softmax output against the sample label.
    CrossEntropy,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::Reconstruction => "reconstruction",
            Loss::CrossEntropy => "cross_entropy",
        }
    }
}

fn check_loss_compat(params: &ModelParams, loss: Loss) -> Result<()> {
    match loss {
        Loss::Reconstruction => {
            if params.has_softmax_head() {
                return Err(Error::InvalidArgument(
                    "reconstruction loss is undefined for a softmax output".into(),
                ));
            }
            if params.input_dim() != params.output_dim() {
                return Err(Error::Shape {
                    context: "autoencoder output",
                    expected: params.input_dim(),
                    actual: params.output_dim(),
                });
            }
        }
        Loss::CrossEntropy => {
            if !params.has_softmax_head() || params.output_dim() != 2 {
                return Err(Error::InvalidArgument(
                    "cross-entropy loss requires a 2-unit softmax output layer".into(),
                ));
            }
        }
    }
    Ok(())
}

fn loss_from_trace(trace: &ForwardTrace, sample: &Sample, loss: Loss) -> Result<f64> {
    match loss {
        Loss::Reconstruction => mse(&sample.features, trace.output()),
        Loss::CrossEntropy => {
            let p = trace.output()[sample.label.index()];
            Ok(-p.max(f64::MIN_POSITIVE).ln())
        }
    }
}

/// Loss of a single sample.
pub fn sample_loss(params: &ModelParams, sample: &Sample, loss: Loss) -> Result<f64> {
    check_loss_compat(params, loss)?;
    let trace = forward(params, &sample.features)?;
    loss_from_trace(&trace, sample, loss)
}

/// Mean loss over a set of samples.
pub fn mean_loss<'a>(
    params: &ModelParams,
    samples: impl IntoIterator<Item = &'a Sample>,
    loss: Loss,
) -> Result<f64> {
    check_loss_compat(params, loss)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for s in samples {
        let trace = forward(params, &s.features)?;
        total += loss_from_trace(&trace, s, loss)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("loss batch"));
    }
    Ok(total / n as f64)
}

/// Average gradient of `loss` over `batch` with respect to the flat
/// parameter vector.
pub fn backward<'a>(
    params: &ModelParams,
    batch: impl IntoIterator<Item = &'a Sample>,
    loss: Loss,
) -> Result<Vec<f64>> {
    check_loss_compat(params, loss)?;
    let mut grad = vec![0.0; params.dim()];
    let mut n = 0usize;
    for sample in batch {
        accumulate_sample_gradient(params, sample, loss, &mut grad)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("gradient batch"));
    }
    let inv = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok(grad)
}

fn accumulate_sample_gradient(
    params: &ModelParams,
    sample: &Sample,
    loss: Loss,
    grad: &mut [f64],
) -> Result<()> {
    let trace = forward(params, &sample.features)?;
    let spec = &params.spec;
    let last = spec.len() - 1;

    // dL/dz for the output layer.
    let mut delta: Vec<f64> = match loss {
        Loss::Reconstruction => {
            let d = sample.features.len() as f64;
            trace
                .output()
                .iter()
                .zip(&sample.features)
                .zip(&trace.pre[last])
                .map(|((y, x), &z)| 2.0 * (y - x) / d * elementwise_grad(spec[last].activation, z))
                .collect()
        }
        Loss::CrossEntropy => {
            let mut d = trace.output().to_vec();
            d[sample.label.index()] -= 1.0;
            d
        }
    };

    for i in (0..spec.len()).rev() {
        let (w_range, b_range) = params.layer_offsets(i);
        let input = trace.layer_input(i);
        let in_dim = spec[i].in_dim;
        {
            let gw = &mut grad[w_range.clone()];
            for (r, &dr) in delta.iter().enumerate() {
                if dr == 0.0 {
                    continue;
                }
                let row = &mut gw[r * in_dim..(r + 1) * in_dim];
                for (g, &x) in row.iter_mut().zip(input) {
                    *g += dr * x;
                }
            }
        }
        for (g, &dr) in grad[b_range].iter_mut().zip(&delta) {
            *g += dr;
        }
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow {
                layer: i,
                stage: "backward",
            });
        }
        if i == 0 {
            break;
        }
        let w = &params.flat[w_range];
        let prev_act = spec[i - 1].activation;
        let mut prev = vec![0.0; in_dim];
        for (r, &dr) in delta.iter().enumerate() {
            if dr == 0.0 {
                continue;
            }
            let row = &w[r * in_dim..(r + 1) * in_dim];
            for (p, &wv) in prev.iter_mut().zip(row) {
                *p += wv * dr;
            }
        }
        for (p, &z) in prev.iter_mut().zip(&trace.pre[i - 1]) {
            *p *= elementwise_grad(prev_act, z);
        }
        delta = prev;
    }
    Ok(())
}
