//! Periodic-event detection on a renewal density.
//!
//! The density is scaled so its maximum is 10, cut into equal sub-densities,
//! and each block is compared against a trimmed-mean smooth of itself with a
//! Pearson chi-square statistic. A block is flagged when the chi-square CDF
//! at `N_bins` degrees of freedom exceeds `1 − P_FA`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::estimation::RenewalDensityEstimate;
use crate::exec::Execution;

/// Peak value after [`normalize_rd`].
pub const NORMALIZED_PEAK: f64 = 10.0;
/// Streams shorter than this get a convergence warning.
pub const MIN_CONVERGED_EVENTS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub n_sub: usize,
    /// Smoothing half-window in bins; `None` means `N_bins / 2`.
    pub half_window: Option<usize>,
    pub trim_fraction: f64,
    pub p_fa: f64,
    pub exclude_origin_bin: bool,
    /// Test only the bins below the estimate's complete-support boundary.
    pub complete_only: bool,
    pub execution: Execution,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            n_sub: 8,
            half_window: None,
            trim_fraction: 0.35,
            p_fa: 0.05,
            exclude_origin_bin: false,
            complete_only: true,
            execution: Execution::default(),
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sub < 1 {
            return Err(Error::InvalidConfig("n_sub must be >= 1".into()));
        }
        if self.half_window == Some(0) {
            return Err(Error::InvalidConfig("smoothing half-window must be >= 1".into()));
        }
        if !(0.0..0.5).contains(&self.trim_fraction) {
            return Err(Error::InvalidConfig(format!(
                "trim fraction must lie in [0, 0.5), got {}",
                self.trim_fraction
            )));
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "P_FA must lie in (0, 1), got {}",
                self.p_fa
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubDensityResult {
    pub index: usize,
    pub chi2: f64,
    pub p: f64,
    pub flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub n_sub: usize,
    pub n_bins: usize,
    pub p_fa: f64,
    pub subs: Vec<SubDensityResult>,
    pub detected: bool,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scales values so the maximum is exactly 10.
pub fn normalize_rd(values: &[f64]) -> Result<Vec<f64>> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::EmptyDensity);
    }
    Ok(values
        .iter()
        .map(|&v| if v == max { NORMALIZED_PEAK } else { NORMALIZED_PEAK * v / max })
        .collect())
}

/// Contiguous blocks of `⌊len / n_sub⌋` bins plus the number of trailing bins
/// that did not fit.
pub fn split_subdensities(values: &[f64], n_sub: usize) -> Result<(Vec<&[f64]>, usize)> {
    if n_sub < 1 || n_sub > values.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot split {} bins into {n_sub} sub-densities",
            values.len()
        )));
    }
    let n_bins = values.len() / n_sub;
    let blocks = values[..n_bins * n_sub].chunks(n_bins).collect();
    Ok((blocks, values.len() - n_bins * n_sub))
}

/// Trimmed mean of the up-to-`2T` neighbours of each bin, the bin itself
/// excluded and the window clipped at the block edges.
pub fn trimmed_mean_smooth(sub: &[f64], half_window: usize, trim_fraction: f64) -> Result<Vec<f64>> {
    if sub.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "smoothing needs at least 2 bins, got {}",
            sub.len()
        )));
    }
    if half_window < 1 {
        return Err(Error::InvalidConfig("smoothing half-window must be >= 1".into()));
    }
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::InvalidConfig(format!(
            "trim fraction must lie in [0, 0.5), got {trim_fraction}"
        )));
    }
    let n = sub.len();
    let mut window = Vec::with_capacity(2 * half_window);
    Ok((0..n)
        .map(|t| {
            window.clear();
            window.extend_from_slice(&sub[t.saturating_sub(half_window)..t]);
            window.extend_from_slice(&sub[t + 1..(t + 1 + half_window).min(n)]);
            window.sort_by(f64::total_cmp);
            let cut = (trim_fraction * window.len() as f64).floor() as usize;
            let kept = if 2 * cut < window.len() {
                &window[cut..window.len() - cut]
            } else {
                &window[..]
            };
            kept.iter().sum::<f64>() / kept.len() as f64
        })
        .collect())
}

/// Pearson statistic `Σ (observed − expected)² / expected`. Bins where both
/// are zero contribute nothing.
pub fn chi_square_stat(sub: &[f64], smoothed: &[f64]) -> Result<f64> {
    if sub.len() != smoothed.len() {
        return Err(Error::InvalidConfig(format!(
            "length mismatch: {} observed vs {} expected bins",
            sub.len(),
            smoothed.len()
        )));
    }
    let mut chi2 = 0.0;
    for (bin, (&o, &e)) in sub.iter().zip(smoothed).enumerate() {
        if e > 0.0 {
            let d = o - e;
            chi2 += d * d / e;
        } else if o != 0.0 {
            return Err(Error::DegenerateBin { bin });
        }
    }
    Ok(chi2)
}

/// Chi-square CDF: regularized lower incomplete gamma `P(dof/2, x/2)`.
pub fn chi_square_cdf(x: f64, dof: usize) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if dof < 1 {
        return Err(Error::Domain("chi-square needs at least 1 degree of freedom".into()));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// The bins detection runs on: optionally only the complete support, and
/// optionally without bin 0.
fn detection_window<'a>(r: &'a RenewalDensityEstimate, cfg: &DetectionConfig) -> &'a [f64] {
    let values = if cfg.complete_only {
        r.complete_values()
    } else {
        &r.values[..]
    };
    if cfg.exclude_origin_bin && !values.is_empty() {
        &values[1..]
    } else {
        values
    }
}

pub fn detect(r: &RenewalDensityEstimate, cfg: &DetectionConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let window = detection_window(r, cfg);
    if window.is_empty() {
        return Err(Error::InsufficientData(
            "renewal density has no bins to test".into(),
        ));
    }
    let normalized = normalize_rd(window)?;
    let (blocks, _dropped) = split_subdensities(&normalized, cfg.n_sub)?;
    let n_bins = blocks[0].len();
    let half_window = cfg.half_window.unwrap_or(n_bins / 2).max(1);
    let threshold = 1.0 - cfg.p_fa;

    let subs = cfg
        .execution
        .map_range(blocks.len(), |index| -> Result<SubDensityResult> {
            let block = blocks[index];
            let smoothed = trimmed_mean_smooth(block, half_window, cfg.trim_fraction)?;
            let chi2 = chi_square_stat(block, &smoothed)?;
            let p = chi_square_cdf(chi2, n_bins)?;
            Ok(SubDensityResult {
                index,
                chi2,
                p,
                flag: p > threshold,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let detected = subs.iter().any(|s| s.flag);
    Ok(DetectionReport {
        n_sub: cfg.n_sub,
        n_bins,
        p_fa: cfg.p_fa,
        subs,
        detected,
    })
}
