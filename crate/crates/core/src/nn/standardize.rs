use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest standard deviation used for scaling. Dimensions whose spread on
/// the fitting data falls below it are only centered.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-dimension z-scaling fitted on training rows only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureStandardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
    fitted: bool,
}

impl FeatureStandardizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fits on `rows`, each weighted by the paired count (e.g. how many
    /// training records share a target).
    pub fn fit_weighted<'a>(rows: impl IntoIterator<Item = (&'a [f64], usize)>) -> Result<Self> {
        let rows: Vec<(&[f64], usize)> = rows.into_iter().filter(|(_, w)| *w > 0).collect();
        let Some(width) = rows.first().map(|(r, _)| r.len()) else {
            return Err(Error::Data("cannot fit a standardizer on zero rows".into()));
        };
        if rows.iter().any(|(r, _)| r.len() != width) {
            return Err(Error::Data("standardizer rows differ in width".into()));
        }
        let total: f64 = rows.iter().map(|(_, w)| *w as f64).sum();
        let mut mean = vec![0.0; width];
        for (r, w) in &rows {
            for (m, x) in mean.iter_mut().zip(*r) {
                *m += x * *w as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        let mut var = vec![0.0; width];
        for (r, w) in &rows {
            for ((v, x), m) in var.iter_mut().zip(*r).zip(&mean) {
                *v += (x - m) * (x - m) * *w as f64;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / total).sqrt();
                if s < STD_FLOOR {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self {
            mean,
            std,
            fitted: true,
        })
    }

    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        Self::fit_weighted(rows.iter().map(|r| (*r, 1)))
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if !self.fitted {
            return Err(Error::Config("standardizer used before fitting".into()));
        }
        if row.len() != self.mean.len() {
            return Err(Error::Data(format!(
                "standardizer expects width {}, got {}",
                self.mean.len(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }
}
