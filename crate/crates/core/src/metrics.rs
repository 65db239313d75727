//! Error measures for measured/estimated pairs: mean error (bias), R², RMSE,
//! MAE, the residual standard deviation Se and the 95% band width 1.96·Se.
//!
//! Residuals are `e_i = estimated_i - measured_i`, so a positive bias means
//! overestimation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BAND_FACTOR: f64 = 1.96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no prediction pairs")]
    Empty,
    #[error("pair {index} is not finite (measured {measured}, estimated {estimated})")]
    NonFinite {
        index: usize,
        measured: f64,
        estimated: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPair {
    pub measured: f64,
    pub estimated: f64,
}

impl PredictionPair {
    pub fn new(measured: f64, estimated: f64) -> Self {
        Self {
            measured,
            estimated,
        }
    }

    pub fn error(&self) -> f64 {
        self.estimated - self.measured
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Meters,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: usize,
    pub bias: f64,
    /// `None` when the measured values have zero variance.
    pub r2: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
    /// `None` when `n < 2`.
    pub se: Option<f64>,
    pub band_width: Option<f64>,
    pub units: Units,
}

pub fn compute_metrics(
    pairs: &[PredictionPair],
    units: Units,
) -> Result<MetricReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some((index, p)) = pairs
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.measured.is_finite() && p.estimated.is_finite()))
    {
        return Err(MetricsError::NonFinite {
            index,
            measured: p.measured,
            estimated: p.estimated,
        });
    }
    let n = pairs.len() as f64;
    let bias = pairs.iter().map(PredictionPair::error).sum::<f64>() / n;
    let sse: f64 = pairs.iter().map(|p| p.error().powi(2)).sum();
    let mae = pairs.iter().map(|p| p.error().abs()).sum::<f64>() / n;
    let mean_measured = pairs.iter().map(|p| p.measured).sum::<f64>() / n;
    let sst: f64 = pairs
        .iter()
        .map(|p| (p.measured - mean_measured).powi(2))
        .sum();

    let se = (pairs.len() >= 2).then(|| {
        let ss: f64 = pairs.iter().map(|p| (p.error() - bias).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    Ok(MetricReport {
        n: pairs.len(),
        bias,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        rmse: (sse / n).sqrt(),
        mae,
        se,
        band_width: se.map(|s| BAND_FACTOR * s),
        units,
    })
}

/// Convenience wrapper over parallel slices.
pub fn compute_metrics_from(
    measured: &[f64],
    estimated: &[f64],
    units: Units,
) -> Result<MetricReport, MetricsError> {
    assert_eq!(
        measured.len(),
        estimated.len(),
        "measured and estimated lengths differ"
    );
    let pairs: Vec<PredictionPair> = measured
        .iter()
        .zip(estimated)
        .map(|(m, e)| PredictionPair::new(*m, *e))
        .collect();
    compute_metrics(&pairs, units)
}

pub fn rmse(measured: &[f64], estimated: &[f64]) -> f64 {
    let sse: f64 = measured
        .iter()
        .zip(estimated)
        .map(|(m, e)| (e - m).powi(2))
        .sum();
    (sse / measured.len() as f64).sqrt()
}
