//! Accuracy metrics for reconstructed parameter maps.

use alloc::vec::Vec;

use crate::epg::TissueParams;
use crate::error::{Error, Result};
use crate::image::ParamMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub count: usize,
    pub rmse_t1_ms: f64,
    pub rmse_t2_ms: f64,
    pub bias_t1_ms: f64,
    pub bias_t2_ms: f64,
    pub r2_t1: f64,
    pub r2_t2: f64,
}

/// Per-axis error statistics of `recon` against `truth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisStats {
    pub rmse: f64,
    pub bias: f64,
    pub r2: f64,
}

impl AxisStats {
    /// RMSE and bias of `recon - truth`; R² is the coefficient of
    /// determination `1 - SS_res / SS_tot` with `SS_tot` taken about the
    /// mean of `truth`. A constant truth gives R² = 1 for a perfect
    /// reconstruction and negative infinity otherwise.
    pub fn compute(truth: &[f64], recon: &[f64]) -> Result<Self> {
        if truth.len() != recon.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), actual: recon.len() });
        }
        if truth.is_empty() {
            return Err(Error::EmptyMask);
        }
        let n = truth.len() as f64;
        let mean_truth = truth.iter().sum::<f64>() / n;
        let (mut ss_res, mut sum_err, mut ss_tot) = (0.0, 0.0, 0.0);
        for (&t, &r) in truth.iter().zip(recon) {
            let e = r - t;
            ss_res += e * e;
            sum_err += e;
            ss_tot += (t - mean_truth) * (t - mean_truth);
        }
        let r2 = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        Ok(AxisStats { rmse: libm::sqrt(ss_res / n), bias: sum_err / n, r2 })
    }
}

impl Metrics {
    pub fn from_pairs(truth: &[TissueParams], recon: &[TissueParams]) -> Result<Self> {
        if truth.len() != recon.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), actual: recon.len() });
        }
        let col = |v: &[TissueParams], f: fn(&TissueParams) -> f64| v.iter().map(f).collect::<Vec<f64>>();
        let t1 = AxisStats::compute(&col(truth, |p| p.t1_ms), &col(recon, |p| p.t1_ms))?;
        let t2 = AxisStats::compute(&col(truth, |p| p.t2_ms), &col(recon, |p| p.t2_ms))?;
        Ok(Metrics {
            count: truth.len(),
            rmse_t1_ms: t1.rmse,
            rmse_t2_ms: t2.rmse,
            bias_t1_ms: t1.bias,
            bias_t2_ms: t2.bias,
            r2_t1: t1.r2,
            r2_t2: t2.r2,
        })
    }
}

/// Metrics over the masked-in voxels. Both maps must carry the same mask.
pub fn compute_metrics(truth: &ParamMap, recon: &ParamMap) -> Result<Metrics> {
    if truth.mask != recon.mask {
        return Err(Error::MaskMismatch);
    }
    let t: Vec<TissueParams> = truth.mask.indices().map(|i| truth.get(i)).collect();
    let r: Vec<TissueParams> = truth.mask.indices().map(|i| recon.get(i)).collect();
    Metrics::from_pairs(&t, &r)
}

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidConfig("linear fit needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("linear fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2 })
}
