use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::format::Dataset;
use super::impute::knn_impute;
use super::pca::{fit_pca, PcaBasis};
use super::scale::{fit_scaler, ScalerParams};
use super::split::split;
use super::table::{load_csv, CsvOptions, RawTable};
use crate::error::{Error, Result};
use crate::nn::Sample;

/// Preprocessing settings.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub k_impute: usize,
    /// Requested components; clamped to the feature count. 0 skips PCA and
    /// scales the imputed features directly.
    pub pca_p: usize,
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_impute: 5,
            pca_p: 100,
            test_fraction: 0.3,
            stratified: true,
            seed: 42,
        }
    }
}

/// Output of [`prepare`] together with the fitted transforms.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub basis: Option<PcaBasis>,
    pub scaler: ScalerParams,
    pub imputed_cells: usize,
}

/// SHA-256 over the little-endian bytes of the fitted transforms.
pub fn transform_hash(basis: Option<&PcaBasis>, scaler: &ScalerParams) -> String {
    let mut h = Sha256::new();
    let pca_parts: Vec<&Vec<f64>> = match basis {
        Some(b) => std::iter::once(&b.mean)
            .chain(&b.components)
            .chain([&b.explained_variance])
            .collect(),
        None => vec![],
    };
    let parts = pca_parts.into_iter().chain([&scaler.min, &scaler.max]);
    for part in parts {
        for v in part {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Impute, split, then fit PCA and the scaler on the training rows only and
/// apply both to every row.
pub fn prepare(table: &RawTable, cfg: &PipelineConfig, source_names: Vec<String>) -> Result<Prepared> {
    if table.n_rows() == 0 {
        return Err(Error::Empty("input table"));
    }
    let imputed_cells = table.missing_count();
    let table = knn_impute(table, cfg.k_impute)?;
    let idx = split(&table.labels, cfg.test_fraction, cfg.seed, cfg.stratified)?;
    let train_rows: Vec<Vec<f64>> = idx.train.iter().map(|&i| table.rows[i].clone()).collect();
    let (p, basis) = if cfg.pca_p == 0 {
        (table.n_cols(), None)
    } else {
        let p = cfg.pca_p.min(table.n_cols());
        (p, Some(fit_pca(&train_rows, p)?))
    };
    let project = |x: &[f64]| match &basis {
        Some(b) => b.project(x),
        None => Ok(x.to_vec()),
    };
    let projected_train = train_rows
        .iter()
        .map(|r| project(r))
        .collect::<Result<Vec<_>>>()?;
    let scaler = fit_scaler(&projected_train)?;

    let emit = |indices: &[usize]| -> Result<Vec<Sample>> {
        indices
            .par_iter()
            .map(|&i| {
                let z = project(&table.rows[i])?;
                Ok(Sample {
                    features: scaler.scale(&z)?,
                    label: table.labels[i],
                    source: table.sources[i],
                })
            })
            .collect()
    };
    let train = emit(&idx.train)?;
    let test = emit(&idx.test)?;

    let info = BTreeMap::from([
        ("basis_sha256".to_string(), transform_hash(basis.as_ref(), &scaler)),
        ("input_features".to_string(), table.n_cols().to_string()),
        ("imputed_cells".to_string(), imputed_cells.to_string()),
        ("k_impute".to_string(), cfg.k_impute.to_string()),
        ("pca_p".to_string(), cfg.pca_p.to_string()),
        ("output_features".to_string(), p.to_string()),
        ("test_fraction".to_string(), cfg.test_fraction.to_string()),
        ("stratified".to_string(), cfg.stratified.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
    ]);
    Ok(Prepared {
        dataset: Dataset {
            dim: p,
            train,
            test,
            sources: source_names,
            info,
        },
        basis,
        scaler,
        imputed_cells,
    })
}

/// Loads the files (source ids 1, 2, ... in argument order) and runs
/// [`prepare`] on their concatenation.
pub fn prepare_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    csv: &CsvOptions,
    cfg: &PipelineConfig,
) -> Result<Prepared> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no input files".into()));
    }
    let tables = paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| load_csv(p, i as u32 + 1, csv))
        .collect::<Result<Vec<_>>>()?;
    let mut tables = tables.into_iter();
    let mut all = tables.next().expect("non-empty");
    for t in tables {
        all.append(t)?;
    }
    let names = paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            p.file_name().unwrap_or(p.as_os_str()).to_string_lossy().into_owned()
        })
        .collect();
    prepare(&all, cfg, names)
}
