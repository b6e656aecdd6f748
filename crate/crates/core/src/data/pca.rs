use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal axes of a training matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `p` orthonormal directions of length `d`, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaBasis {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    /// `components^T (x - mean)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::Shape {
                context: "pca projection input",
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum())
            .collect())
    }

    /// Maps projected coordinates back into the input space.
    pub fn reconstruct(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, &zi) in self.components.iter().zip(z) {
            for (xj, cj) in x.iter_mut().zip(c) {
                *xj += zi * cj;
            }
        }
        x
    }
}

/// Sample covariance (denominator `n - 1`) of mean-centred rows.
pub fn covariance(rows: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centred = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            centred[j] = r[j] - mean[j];
        }
        for a in 0..d {
            let ca = centred[a];
            if ca == 0.0 {
                continue;
            }
            for b in a..d {
                cov[(a, b)] += ca * centred[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

/// Fits a `p`-component basis. Each component's largest-magnitude entry is
/// made positive.
pub fn fit_pca(rows: &[Vec<f64>], p: usize) -> Result<PcaBasis> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pca needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::Shape {
            context: "pca training row",
            expected: d,
            actual: rows[r].len(),
        });
    }
    if p == 0 || p > d {
        return Err(Error::InvalidArgument(format!("pca: {p} components requested for {d} features")));
    }
    let (mean, cov) = covariance(rows);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(p);
    let mut explained_variance = Vec::with_capacity(p);
    for &i in order.iter().take(p) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let mut lead = 0;
        for j in 1..d {
            if v[j].abs() > v[lead].abs() {
                lead = j;
            }
        }
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaBasis {
        mean,
        components,
        explained_variance,
    })
}
