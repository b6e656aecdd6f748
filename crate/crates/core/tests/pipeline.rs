//! Data pipeline properties checked through the public API.

mod common;

use std::fs;

use proptest::prelude::*;
use rand::Rng;

use feddisc::data::{fit_pca, load_csv, prepare, read_dataset, write_dataset, CsvOptions, MarkerColumn, PipelineConfig};
use feddisc::rng::rng_from_seed;
use feddisc::synthetic::{anomaly_table, AnomalyConfig};
use feddisc::Error;

fn random_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn full_rank_projection_preserves_distances() {
    let rows = random_rows(1, 40, 6);
    let basis = fit_pca(&rows, 6).unwrap();
    let z: Vec<Vec<f64>> = rows.iter().map(|r| basis.project(r).unwrap()).collect();
    for i in 0..rows.len() {
        for j in 0..i {
            let (dx, dz) = (dist(&rows[i], &rows[j]), dist(&z[i], &z[j]));
            assert!((dx - dz).abs() <= 1e-9 * dx.max(1.0), "{dx} vs {dz}");
        }
    }
}

#[test]
fn reconstruction_error_shrinks_with_more_components() {
    let rows = random_rows(2, 60, 7);
    let errors: Vec<f64> = (1..=7)
        .map(|p| {
            let basis = fit_pca(&rows, p).unwrap();
            rows.iter()
                .map(|r| dist(r, &basis.reconstruct(&basis.project(r).unwrap())).powi(2))
                .sum()
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{errors:?}");
    }
    assert!(errors[6] < 1e-18);
}

#[test]
fn transformed_rows_land_in_unit_interval() {
    let table = anomaly_table(&AnomalyConfig {
        samples: 400,
        dim: 10,
        shifted_dims: 3,
        ..AnomalyConfig::default()
    })
    .unwrap();
    let cfg = PipelineConfig {
        pca_p: 5,
        ..PipelineConfig::default()
    };
    let prepared = prepare(&table, &cfg, vec!["bench".into()]).unwrap();
    let ds = &prepared.dataset;
    assert_eq!(ds.dim, 5);
    assert_eq!(ds.len(), 400);
    for s in ds.train.iter().chain(&ds.test) {
        assert!(s.features.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn dataset_file_round_trip() {
    let table = anomaly_table(&AnomalyConfig {
        samples: 120,
        dim: 6,
        shifted_dims: 2,
        sources: 3,
        ..AnomalyConfig::default()
    })
    .unwrap();
    let prepared = prepare(&table, &PipelineConfig::default(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.fdsc");
    write_dataset(&path, &prepared.dataset).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), prepared.dataset);
}

#[test]
fn csv_loader_errors() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let opts = CsvOptions::default();

    assert!(load_csv(dir.path().join("absent.csv"), 1, &opts).is_err());

    let no_marker = write("a.csv", "x,y\n1,2\n");
    assert!(matches!(load_csv(&no_marker, 1, &opts), Err(Error::MalformedRow { .. })));

    let ragged = write("b.csv", "x,marker\n1,Natural\n2,3,Attack\n");
    assert!(matches!(load_csv(&ragged, 1, &opts), Err(Error::MalformedRow { row: 2, .. })));

    let text_cell = write("c.csv", "x,marker\nabc,Natural\n");
    assert!(matches!(load_csv(&text_cell, 1, &opts), Err(Error::MalformedRow { row: 1, .. })));

    let last = write("d.csv", "x,label\n1.5,Attack\n-inf,Natural\n");
    let by_last = CsvOptions {
        marker: MarkerColumn::Last,
        ..CsvOptions::default()
    };
    let t = load_csv(&last, 4, &by_last).unwrap();
    assert_eq!(t.n_rows(), 2);
    assert_eq!(t.missing_count(), 1);
    assert_eq!(t.sources, vec![4, 4]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pca_matches_jacobi_oracle(seed in any::<u64>(), n in 3usize..30, d in 1usize..7, p_frac in 0.0f64..1.0) {
        let rows = random_rows(seed, n, d);
        let p = 1 + ((d - 1) as f64 * p_frac) as usize;
        let basis = fit_pca(&rows, p).unwrap();
        let (values, vectors) = common::jacobi_eigen(&common::sample_covariance(&rows));
        let scale = values[0].abs().max(1.0);
        for (a, b) in basis.explained_variance.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
        // subspaces are only defined up to rotation inside a repeated
        // eigenvalue, so compare them when the boundary gap is clear
        let gap = if p < d { values[p - 1] - values[p] } else { f64::INFINITY };
        if gap > 1e-6 * scale {
            prop_assert!(common::max_principal_sine(&vectors[..p], &basis.components) <= 1e-8);
        }
        for (i, u) in basis.components.iter().enumerate() {
            for (j, v) in basis.components.iter().enumerate() {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - expected).abs() <= 1e-10);
            }
        }
    }
}
