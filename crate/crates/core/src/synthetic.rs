//! Synthetic workloads: a quadratic toy objective for the optimizer and a
//! labelled anomaly benchmark shaped like the grid measurement tables.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{prepare, Dataset, PipelineConfig, RawTable};
use crate::error::{Error, Result};
use crate::federation::LocalObjective;
use crate::fsio::write_atomic;
use crate::nn::{Activation, Label, LayerSpec, ModelParams};
use crate::rng::{rng_from_seed, SimRng};

/// Client minimizing `||z - target||^2`, optionally with Gaussian gradient
/// noise.
#[derive(Clone, Debug)]
pub struct QuadraticClient {
    pub zone_id: u32,
    pub target: Vec<f64>,
    pub noise_std: f64,
    pub samples: usize,
}

impl QuadraticClient {
    pub fn new(zone_id: u32, target: Vec<f64>) -> Self {
        Self {
            zone_id,
            target,
            noise_std: 0.0,
            samples: 1,
        }
    }
}

/// A parameter vector of length `dim` wrapped as a single linear unit
/// (`dim - 1` weights and one bias), so the optimizer sees exactly `dim`
/// coordinates.
pub fn flat_params(values: Vec<f64>) -> Result<ModelParams> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("flat parameter vectors need at least 2 entries".into()));
    }
    let spec = vec![LayerSpec::new(values.len() - 1, 1, Activation::Identity)];
    ModelParams::new(spec, values)
}

/// Uniform draws in `[-1, 1]^dim`.
pub fn random_target(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

impl LocalObjective for QuadraticClient {
    fn zone_id(&self) -> u32 {
        self.zone_id
    }

    fn num_samples(&self) -> usize {
        self.samples
    }

    fn loss(&self, params: &ModelParams) -> Result<f64> {
        Ok(params.flat().iter().zip(&self.target).map(|(z, t)| (z - t).powi(2)).sum())
    }

    fn gradient(&self, params: &ModelParams, rng: &mut SimRng) -> Result<Vec<f64>> {
        if params.dim() != self.target.len() {
            return Err(Error::Shape {
                context: "quadratic client parameters",
                expected: self.target.len(),
                actual: params.dim(),
            });
        }
        Ok(params
            .flat()
            .iter()
            .zip(&self.target)
            .map(|(z, t)| {
                let noise = if self.noise_std > 0.0 {
                    self.noise_std * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                2.0 * (z - t) + noise
            })
            .collect())
    }
}

/// Gaussian-mixture "natural" measurements plus mean-shifted "attack" rows.
#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyConfig {
    pub samples: usize,
    pub dim: usize,
    pub attack_fraction: f64,
    pub mixture_components: usize,
    /// Spread of the mixture means, in units of the per-feature std.
    pub component_spread: f64,
    /// Attack rows are shifted by `shift_sigmas` std on `shifted_dims`
    /// randomly chosen features.
    pub shifted_dims: usize,
    pub shift_sigmas: f64,
    /// Rows are spread over this many source ids (1-based, contiguous).
    pub sources: u32,
    pub seed: u64,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        Self {
            samples: 5000,
            dim: 32,
            attack_fraction: 0.3,
            mixture_components: 3,
            component_spread: 1.5,
            shifted_dims: 10,
            shift_sigmas: 4.0,
            sources: 1,
            seed: 7,
        }
    }
}

/// Draws the benchmark. Row order is random; labels are exact
/// (`round(samples * attack_fraction)` attacks).
pub fn anomaly_table(cfg: &AnomalyConfig) -> Result<RawTable> {
    if cfg.dim == 0 || cfg.samples == 0 || cfg.mixture_components == 0 || cfg.sources == 0 {
        return Err(Error::InvalidArgument("anomaly benchmark sizes must be positive".into()));
    }
    if cfg.shifted_dims > cfg.dim {
        return Err(Error::InvalidArgument(format!(
            "{} shifted features requested out of {}",
            cfg.shifted_dims, cfg.dim
        )));
    }
    if !(0.0..=1.0).contains(&cfg.attack_fraction) {
        return Err(Error::InvalidArgument(format!("attack fraction {}", cfg.attack_fraction)));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let means: Vec<Vec<f64>> = (0..cfg.mixture_components)
        .map(|_| {
            (0..cfg.dim)
                .map(|_| rng.random_range(-cfg.component_spread..=cfg.component_spread))
                .collect()
        })
        .collect();
    let shifted = rand::seq::index::sample(&mut rng, cfg.dim, cfg.shifted_dims).into_vec();
    let attacks = (cfg.samples as f64 * cfg.attack_fraction).round() as usize;
    let mut labels: Vec<Label> = (0..cfg.samples)
        .map(|i| if i < attacks { Label::Attack } else { Label::Natural })
        .collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);

    let mut rows = Vec::with_capacity(cfg.samples);
    for &label in &labels {
        let mean = &means[rng.random_range(0..cfg.mixture_components)];
        let mut row: Vec<f64> = mean
            .iter()
            .map(|m| m + rng.sample::<f64, _>(StandardNormal))
            .collect();
        if label == Label::Attack {
            for &j in &shifted {
                row[j] += cfg.shift_sigmas;
            }
        }
        rows.push(row);
    }
    let per_source = cfg.samples.div_ceil(cfg.sources as usize);
    Ok(RawTable {
        columns: (0..cfg.dim).map(|j| format!("f{j}")).collect(),
        missing: vec![vec![false; cfg.dim]; cfg.samples],
        sources: (0..cfg.samples).map(|i| (i / per_source) as u32 + 1).collect(),
        labels,
        rows,
    })
}

/// The benchmark pushed through the preprocessing pipeline.
pub fn anomaly_dataset(cfg: &AnomalyConfig, pipeline: &PipelineConfig) -> Result<Dataset> {
    let table = anomaly_table(cfg)?;
    let names = (1..=cfg.sources).map(|i| format!("synthetic-{i}")).collect();
    Ok(prepare(&table, pipeline, names)?.dataset)
}

/// Writes `table` as CSV with a trailing `marker` column holding
/// `Natural`/`Attack`; missing cells are left empty.
pub fn write_table_csv(table: &RawTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for c in &table.columns {
        out.push_str(c);
        out.push(',');
    }
    out.push_str("marker\n");
    for ((row, miss), label) in table.rows.iter().zip(&table.missing).zip(&table.labels) {
        for (v, &m) in row.iter().zip(miss) {
            if !m {
                let _ = write!(out, "{v}");
            }
            out.push(',');
        }
        out.push_str(label.as_str());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_csv, CsvOptions};

    #[test]
    fn exact_attack_count_and_shift() {
        let cfg = AnomalyConfig {
            samples: 2000,
            ..Default::default()
        };
        let t = anomaly_table(&cfg).unwrap();
        assert_eq!(t.labels.iter().filter(|&&l| l == Label::Attack).count(), 600);
        let mean_of = |label: Label, j: usize| {
            let v: Vec<f64> = t
                .rows
                .iter()
                .zip(&t.labels)
                .filter(|(_, &l)| l == label)
                .map(|(r, _)| r[j])
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let shifted = (0..cfg.dim)
            .filter(|&j| mean_of(Label::Attack, j) - mean_of(Label::Natural, j) > 3.0)
            .count();
        assert_eq!(shifted, 10);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bench.csv");
        let mut t = anomaly_table(&AnomalyConfig {
            samples: 20,
            dim: 4,
            shifted_dims: 2,
            ..Default::default()
        })
        .unwrap();
        t.rows[3][1] = f64::NAN;
        t.missing[3][1] = true;
        write_table_csv(&t, &p).unwrap();
        let back = load_csv(&p, 1, &CsvOptions::default()).unwrap();
        assert_eq!(back.labels, t.labels);
        assert_eq!(back.missing, t.missing);
        assert_eq!(back.rows[0], t.rows[0]);
    }

    #[test]
    fn quadratic_gradient() {
        let c = QuadraticClient::new(0, vec![1.0, -1.0]);
        let p = flat_params(vec![0.0, 0.0]).unwrap();
        let g = c.gradient(&p, &mut rng_from_seed(0)).unwrap();
        assert_eq!(g, vec![-2.0, 2.0]);
        assert_eq!(c.loss(&p).unwrap(), 2.0);
    }
}
