//! Writes three CSV files with gaps, then imputes, splits, projects and
//! scales them into a dataset file.

use feddisc::data::{knn_impute, load_csv, prepare_files, read_dataset, write_dataset, CsvOptions, PipelineConfig};
use feddisc::synthetic::{anomaly_table, write_table_csv, AnomalyConfig};

fn main() -> feddisc::Result<()> {
    let dir = std::env::temp_dir().join(format!("feddisc-prep-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| feddisc::Error::Data(e.to_string()))?;

    let mut paths = Vec::new();
    for file in 0..3u64 {
        let mut t = anomaly_table(&AnomalyConfig {
            samples: 400,
            dim: 12,
            shifted_dims: 4,
            seed: 100 + file,
            ..Default::default()
        })?;
        for (i, row) in t.rows.iter_mut().enumerate().filter(|(i, _)| i % 37 == 0) {
            row[i % 12] = f64::NAN;
            t.missing[i][i % 12] = true;
        }
        let p = dir.join(format!("scenario{}.csv", file + 1));
        write_table_csv(&t, &p)?;
        paths.push(p);
    }

    let opts = CsvOptions::default();
    let first = load_csv(&paths[0], 1, &opts)?;
    println!("{}: {} rows, {} columns, {} missing cells", paths[0].display(), first.n_rows(), first.n_cols(), first.missing_count());
    let filled = knn_impute(&first, 5)?;
    println!("after imputation: {} missing cells", filled.missing_count());

    let cfg = PipelineConfig {
        pca_p: 8,
        ..Default::default()
    };
    let prepared = prepare_files(&paths, &opts, &cfg)?;
    let basis = prepared.basis.as_ref().expect("pca enabled");
    let total: f64 = basis.explained_variance.iter().sum();
    println!("kept {} components, variances {:.3?} (sum {total:.3})", basis.output_dim(), basis.explained_variance);

    let out = dir.join("scenarios.fdsc");
    write_dataset(&out, &prepared.dataset)?;
    let back = read_dataset(&out)?;
    println!("{}: {} train / {} test rows from {} files", out.display(), back.train.len(), back.test.len(), back.sources.len());
    let manifest = std::fs::read_to_string(feddisc::data::format::manifest_path(&out)).unwrap_or_default();
    print!("{manifest}");
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
