use rayon::prelude::*;

use super::RawTable;
use crate::error::{Error, Result};

/// Euclidean distance over coordinates observed in both rows, rescaled by
/// `total / observed` so rows with fewer shared coordinates are not
/// favoured. `None` when the rows share no observed coordinate.
pub fn masked_distance(a: &[f64], a_miss: &[bool], b: &[f64], b_miss: &[bool]) -> Option<f64> {
    let mut sum = 0.0;
    let mut shared = 0usize;
    for i in 0..a.len() {
        if !a_miss[i] && !b_miss[i] {
            let d = a[i] - b[i];
            sum += d * d;
            shared += 1;
        }
    }
    (shared > 0).then(|| (sum * a.len() as f64 / shared as f64).sqrt())
}

/// Fills every missing cell with the inverse-distance-weighted mean of that
/// feature over the `k` nearest rows that observe it. Donor values come
/// from the original table only, so a second pass is a no-op.
pub fn knn_impute(table: &RawTable, k: usize) -> Result<RawTable> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n_cols = table.n_cols();
    for c in 0..n_cols {
        if table.n_rows() > 0 && table.missing.iter().all(|m| m[c]) {
            return Err(Error::UnimputableColumn(table.columns[c].clone()));
        }
    }
    if let Some(r) = table.missing.iter().position(|m| m.iter().all(|&x| x)) {
        return Err(Error::Data(format!("row {r} has no observed features")));
    }

    let column_means: Vec<f64> = (0..n_cols)
        .map(|c| {
            let (s, n) = table
                .rows
                .iter()
                .zip(&table.missing)
                .filter(|(_, m)| !m[c])
                .fold((0.0, 0usize), |(s, n), (r, _)| (s + r[c], n + 1));
            s / n as f64
        })
        .collect();

    let filled: Vec<Option<Vec<f64>>> = (0..table.n_rows())
        .into_par_iter()
        .map(|r| {
            let miss = &table.missing[r];
            if !miss.iter().any(|&m| m) {
                return None;
            }
            let dists: Vec<Option<f64>> = (0..table.n_rows())
                .map(|s| {
                    if s == r {
                        None
                    } else {
                        masked_distance(&table.rows[r], miss, &table.rows[s], &table.missing[s])
                    }
                })
                .collect();
            let mut row = table.rows[r].clone();
            for c in (0..n_cols).filter(|&c| miss[c]) {
                let mut donors: Vec<(f64, usize)> = dists
                    .iter()
                    .enumerate()
                    .filter_map(|(s, d)| d.filter(|_| !table.missing[s][c]).map(|d| (d, s)))
                    .collect();
                row[c] = if donors.is_empty() {
                    column_means[c]
                } else {
                    let take = k.min(donors.len());
                    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                    if take < donors.len() {
                        donors.select_nth_unstable_by(take - 1, by_dist);
                        donors.truncate(take);
                    }
                    weighted_mean(donors.iter().map(|&(d, s)| (d, table.rows[s][c])))
                };
            }
            Some(row)
        })
        .collect();

    let mut out = table.clone();
    for (r, row) in filled.into_iter().enumerate() {
        if let Some(row) = row {
            out.rows[r] = row;
            out.missing[r].iter_mut().for_each(|m| *m = false);
        }
    }
    Ok(out)
}

/// Inverse-distance weighting; donors at distance zero, if any, share all
/// of the weight equally. The result is clamped to the donor range so
/// rounding cannot push it outside.
fn weighted_mean(donors: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let (lo, hi) = donors
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(v), hi.max(v)));
    let exact: Vec<f64> = donors.clone().filter(|(d, _)| *d == 0.0).map(|(_, v)| v).collect();
    let mean = if !exact.is_empty() {
        exact.iter().sum::<f64>() / exact.len() as f64
    } else {
        let (num, den) = donors.fold((0.0, 0.0), |(num, den), (d, v)| (num + v / d, den + 1.0 / d));
        num / den
    };
    mean.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Label;

    fn table(rows: Vec<Vec<f64>>) -> RawTable {
        let missing = rows.iter().map(|r| r.iter().map(|v| v.is_nan()).collect()).collect();
        let n = rows.len();
        RawTable {
            columns: (0..rows[0].len()).map(|c| format!("c{c}")).collect(),
            rows,
            missing,
            labels: vec![Label::Natural; n],
            sources: vec![1; n],
        }
    }

    #[test]
    fn constant_column_imputes_constant() {
        let t = table(vec![
            vec![7.0, 1.0],
            vec![f64::NAN, 2.0],
            vec![7.0, 3.0],
            vec![7.0, 4.0],
        ]);
        let out = knn_impute(&t, 2).unwrap();
        assert_eq!(out.rows[1][0], 7.0);
        assert_eq!(out.missing_count(), 0);
    }

    #[test]
    fn complete_table_is_untouched() {
        let t = table(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(knn_impute(&t, 3).unwrap(), t);
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let t = table(vec![vec![1.0, f64::NAN], vec![3.0, f64::NAN]]);
        assert!(matches!(knn_impute(&t, 1), Err(Error::UnimputableColumn(c)) if c == "c1"));
    }

    /// Enumerates every pairwise distance from scratch.
    fn oracle(rows: &[Vec<f64>], r: usize, c: usize, k: usize) -> f64 {
        let d = rows[0].len();
        let mut cands = Vec::new();
        for (s, other) in rows.iter().enumerate() {
            if s == r || other[c].is_nan() {
                continue;
            }
            let mut sq = 0.0;
            let mut shared = 0;
            for j in 0..d {
                if !rows[r][j].is_nan() && !other[j].is_nan() {
                    sq += (rows[r][j] - other[j]).powi(2);
                    shared += 1;
                }
            }
            if shared > 0 {
                cands.push(((sq * d as f64 / shared as f64).sqrt(), other[c]));
            }
        }
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let top = &cands[..k];
        let w: f64 = top.iter().map(|(d, _)| 1.0 / d).sum();
        top.iter().map(|(d, v)| v / d).sum::<f64>() / w
    }

    #[test]
    fn matches_brute_force_oracle() {
        let rows = vec![
            vec![0.1, 1.0, 5.0],
            vec![0.4, f64::NAN, 4.0],
            vec![0.9, 3.0, 1.0],
            vec![0.2, 1.5, 4.5],
            vec![0.7, 2.5, 2.0],
            vec![0.3, 2.0, 3.0],
        ];
        let out = knn_impute(&table(rows.clone()), 2).unwrap();
        let expected = oracle(&rows, 1, 1, 2);
        assert!((out.rows[1][1] - expected).abs() < 1e-12);
        let donors = [1.0, 3.0, 1.5, 2.5, 2.0];
        let (lo, hi) = (1.0, 3.0);
        assert!(out.rows[1][1] >= lo && out.rows[1][1] <= hi, "{donors:?}");
    }

    #[test]
    fn imputation_is_idempotent() {
        let t = table(vec![
            vec![1.0, f64::NAN, 3.0],
            vec![2.0, 2.0, f64::NAN],
            vec![f64::NAN, 1.0, 1.0],
            vec![4.0, 0.5, 2.0],
        ]);
        let once = knn_impute(&t, 2).unwrap();
        assert_eq!(knn_impute(&once, 2).unwrap(), once);
    }
}
