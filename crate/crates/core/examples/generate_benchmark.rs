//! Writes the synthetic benchmark as CSV files for the command-line tool.
//!
//! `cargo run --example generate_benchmark -- <dir> [files] [rows per file]`

use feddisc::synthetic::{anomaly_table, write_table_csv, AnomalyConfig};

fn main() -> feddisc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = std::path::PathBuf::from(args.first().map(String::as_str).unwrap_or("benchmark"));
    let files: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let rows: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1250);
    std::fs::create_dir_all(&dir).map_err(|e| feddisc::Error::Data(e.to_string()))?;
    let full = anomaly_table(&AnomalyConfig {
        samples: rows * files,
        ..Default::default()
    })?;
    for f in 0..files {
        let part = full.select(&(f * rows..(f + 1) * rows).collect::<Vec<_>>());
        let path = dir.join(format!("data{}.csv", f + 1));
        write_table_csv(&part, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}
