use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature min-max scaling fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<ScalerParams> {
    let first = rows.first().ok_or(Error::Empty("scaler training rows"))?;
    let mut min = first.clone();
    let mut max = first.clone();
    for r in rows {
        if r.len() != min.len() {
            return Err(Error::Shape {
                context: "scaler training row",
                expected: min.len(),
                actual: r.len(),
            });
        }
        for j in 0..r.len() {
            min[j] = min[j].min(r[j]);
            max[j] = max[j].max(r[j]);
        }
    }
    Ok(ScalerParams { min, max })
}

impl ScalerParams {
    /// `(x - min) / (max - min)` clamped to `[0, 1]`; constant features map
    /// to 0.5.
    pub fn scale(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.min.len() {
            return Err(Error::Shape {
                context: "scaler input",
                expected: self.min.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }
}
