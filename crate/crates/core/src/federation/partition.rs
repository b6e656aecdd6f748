use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::ZoneDataset;
use crate::error::{Error, Result};
use crate::nn::{Label, Sample};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PartitionScheme {
    /// Shuffled, near-equal split.
    IidUniform,
    /// Per class, zone proportions drawn from `Dirichlet(alpha)`. A class
    /// with at least as many samples as zones gives every zone one sample
    /// before the proportional split.
    Dirichlet(f64),
    /// Whole source files assigned to zones round-robin.
    ByScenarioFile,
}

/// Splits `counts` total items into integer shares proportional to
/// `weights` using largest remainders (ties to the lower index).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Zone membership as index lists into `samples`; each list is ascending.
pub fn partition_indices(
    samples: &[Sample],
    zones: usize,
    scheme: PartitionScheme,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if zones == 0 {
        return Err(Error::InvalidArgument("at least one zone is required".into()));
    }
    if zones > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "{zones} zones requested for only {} samples",
            samples.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = vec![Vec::new(); zones];
    match scheme {
        PartitionScheme::IidUniform => {
            let mut idx: Vec<usize> = (0..samples.len()).collect();
            idx.shuffle(&mut rng);
            let sizes = apportion(samples.len(), &vec![1.0; zones]);
            let mut start = 0;
            for (z, size) in sizes.into_iter().enumerate() {
                out[z].extend_from_slice(&idx[start..start + size]);
                start += size;
            }
        }
        PartitionScheme::Dirichlet(alpha) => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::InvalidArgument(format!("dirichlet alpha {alpha}")));
            }
            let gamma = Gamma::new(alpha, 1.0)
                .map_err(|e| Error::InvalidArgument(format!("dirichlet alpha {alpha}: {e}")))?;
            let mut by_label: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
            for (i, s) in samples.iter().enumerate() {
                by_label.entry(s.label).or_default().push(i);
            }
            for (_, mut idx) in by_label {
                let weights: Vec<f64> = (0..zones).map(|_| gamma.sample(&mut rng)).collect();
                let weights = if weights.iter().sum::<f64>() > 0.0 {
                    weights
                } else {
                    vec![1.0; zones]
                };
                idx.shuffle(&mut rng);
                let floor = usize::from(idx.len() >= zones);
                let sizes = apportion(idx.len() - floor * zones, &weights);
                let mut start = 0;
                for (z, size) in sizes.into_iter().enumerate() {
                    let size = size + floor;
                    out[z].extend_from_slice(&idx[start..start + size]);
                    start += size;
                }
            }
        }
        PartitionScheme::ByScenarioFile => {
            let mut sources: Vec<u32> = samples.iter().map(|s| s.source).collect();
            sources.sort_unstable();
            sources.dedup();
            if sources.len() < zones {
                return Err(Error::Data(format!(
                    "{} source files cannot fill {zones} zones",
                    sources.len()
                )));
            }
            for (i, s) in samples.iter().enumerate() {
                let rank = sources.binary_search(&s.source).expect("source present");
                out[rank % zones].push(i);
            }
        }
    }
    for zone in &mut out {
        zone.sort_unstable();
    }
    Ok(out)
}

pub fn partition_zones(
    samples: &[Sample],
    zones: usize,
    scheme: PartitionScheme,
    seed: u64,
) -> Result<Vec<ZoneDataset>> {
    Ok(partition_indices(samples, zones, scheme, seed)?
        .into_iter()
        .enumerate()
        .map(|(z, idx)| ZoneDataset::new(z as u32, idx.into_iter().map(|i| samples[i].clone()).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn dataset(n: usize, attack_every: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let label = if attack_every > 0 && i % attack_every == 0 {
                    Label::Attack
                } else {
                    Label::Natural
                };
                Sample::new(vec![i as f64], label)
            })
            .collect()
    }

    #[test]
    fn iid_even_split() {
        let zones = partition_zones(&dataset(100, 3), 2, PartitionScheme::IidUniform, 1).unwrap();
        assert_eq!(zones[0].len(), 50);
        assert_eq!(zones[1].len(), 50);
    }

    #[test]
    fn scenario_files_round_robin() {
        let samples: Vec<Sample> = (0..150)
            .map(|i| Sample {
                features: vec![i as f64],
                label: Label::Natural,
                source: (i / 10) as u32 + 1,
            })
            .collect();
        let zones = partition_zones(&samples, 5, PartitionScheme::ByScenarioFile, 0).unwrap();
        for z in &zones {
            let mut files: Vec<u32> = z.samples.iter().map(|s| s.source).collect();
            files.dedup();
            assert_eq!(files.len(), 3);
        }
        assert_eq!(zones[0].samples[0].source, 1);
        assert!(zones[0].samples.iter().any(|s| s.source == 6));
        assert!(partition_zones(&samples, 16, PartitionScheme::ByScenarioFile, 0).is_err());
    }

    #[test]
    fn large_alpha_approaches_global_label_ratio() {
        let samples = dataset(10_000, 4);
        let global = samples.iter().filter(|s| s.label == Label::Attack).count() as f64 / 10_000.0;
        let zones = partition_zones(&samples, 4, PartitionScheme::Dirichlet(1000.0), 9).unwrap();
        for z in &zones {
            let p = z.samples.iter().filter(|s| s.label == Label::Attack).count() as f64 / z.len() as f64;
            let chi2 = (p - global).powi(2) / global + (p - global).powi(2) / (1.0 - global);
            assert!(chi2 < 0.05, "zone {}: chi2 {chi2}", z.zone_id);
        }
    }

    #[test]
    fn small_alpha_skews_labels() {
        let samples = dataset(4_000, 2);
        let zones = partition_zones(&samples, 4, PartitionScheme::Dirichlet(0.1), 3).unwrap();
        let ratios: Vec<f64> = zones
            .iter()
            .filter(|z| !z.is_empty())
            .map(|z| z.samples.iter().filter(|s| s.label == Label::Attack).count() as f64 / z.len() as f64)
            .collect();
        let spread = ratios.iter().cloned().fold(0.0, f64::max) - ratios.iter().cloned().fold(1.0, f64::min);
        assert!(spread > 0.2, "{ratios:?}");
    }

    #[test]
    fn dirichlet_gives_every_zone_each_large_class() {
        let samples = dataset(400, 10);
        for seed in 0..50 {
            let zones = partition_zones(&samples, 8, PartitionScheme::Dirichlet(0.05), seed).unwrap();
            for z in &zones {
                assert!(z.samples.iter().any(|s| s.label == Label::Attack));
                assert!(z.samples.iter().any(|s| s.label == Label::Natural));
            }
        }
    }

    #[test]
    fn rejects_more_zones_than_samples() {
        assert!(partition_zones(&dataset(3, 0), 4, PartitionScheme::IidUniform, 0).is_err());
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.0, 1.0]), vec![0, 7]);
    }

    proptest! {
        #[test]
        fn partitions_conserve_samples(
            n in 1usize..300,
            k in 1usize..8,
            scheme in prop_oneof![
                Just(PartitionScheme::IidUniform),
                (0.05f64..50.0).prop_map(PartitionScheme::Dirichlet),
                Just(PartitionScheme::ByScenarioFile),
            ],
            seed in any::<u64>(),
        ) {
            prop_assume!(k <= n);
            let samples: Vec<Sample> = (0..n)
                .map(|i| Sample {
                    features: vec![i as f64],
                    label: if i % 3 == 0 { Label::Attack } else { Label::Natural },
                    source: (i % 11) as u32,
                })
                .collect();
            let parts = match partition_indices(&samples, k, scheme, seed) {
                Ok(p) => p,
                Err(_) => {
                    prop_assert!(matches!(scheme, PartitionScheme::ByScenarioFile));
                    return Ok(());
                }
            };
            let mut all: Vec<usize> = parts.into_iter().flatten().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
