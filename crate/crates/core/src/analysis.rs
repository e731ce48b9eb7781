//! End-to-end pipelines: bin-width choice, both renewal-density estimates,
//! their difference and the correlation zone.

use serde::{Deserialize, Serialize};

use crate::characterization::{
    characterize, difference, CharacterizationResult, DifferenceCurves, ZoneThresholds,
};
use crate::detection::{detect, DetectionConfig, DetectionReport};
use crate::error::{Error, Result};
use crate::estimation::{
    convolution_rd, convolution_t_max, default_max_order, empirical_rd_from_gaps,
    first_order_pdf, RenewalDensityEstimate,
};
use crate::exec::Execution;
use crate::histogram::{default_grid, optimal_bin_width};
use crate::ingest::InterArrivals;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimationConfig {
    /// Maximum partial-sum order; `None` uses `min(1000, ⌊m/10⌋)`.
    pub k: Option<usize>,
    /// Shared bin width; `None` picks it from the first-order gaps.
    pub bin_width: Option<f64>,
    pub execution: Execution,
}

/// Cost-minimizing width over the default grid for the gaps in `a`.
pub fn select_bin_width(a: &InterArrivals, exec: Execution) -> Result<f64> {
    let samples = a.as_f64();
    let max = samples.iter().copied().fold(0.0, f64::max);
    optimal_bin_width(&samples, &default_grid(max), exec)
}

fn resolve(a: &InterArrivals, cfg: &EstimationConfig) -> Result<(usize, f64, f64)> {
    let mean_gap = a.mean();
    if !(mean_gap > 0.0) {
        return Err(Error::InsufficientData(
            "all events share one timestamp; the stream has no duration".into(),
        ));
    }
    let k = cfg.k.unwrap_or_else(|| default_max_order(a.len()));
    let bin_width = match cfg.bin_width {
        Some(w) => w,
        None => select_bin_width(a, cfg.execution)?,
    };
    Ok((k, bin_width, 1.0 / mean_gap))
}

/// Empirical estimate only, on the shared bin width.
pub fn estimate_empirical(a: &InterArrivals, cfg: &EstimationConfig) -> Result<RenewalDensityEstimate> {
    let (k, bin_width, _) = resolve(a, cfg)?;
    empirical_rd_from_gaps(a, k, bin_width, None, cfg.execution)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalPair {
    pub bin_width: f64,
    pub k: usize,
    pub rate: f64,
    pub empirical: RenewalDensityEstimate,
    pub convolution: RenewalDensityEstimate,
}

pub fn estimate_pair(a: &InterArrivals, cfg: &EstimationConfig) -> Result<RenewalPair> {
    let (k, bin_width, rate) = resolve(a, cfg)?;
    let empirical = empirical_rd_from_gaps(a, k, bin_width, None, cfg.execution)?;
    let f1 = first_order_pdf(a, bin_width, convolution_t_max(k, a.mean()))?;
    let convolution = convolution_rd(&f1, k, rate, cfg.execution)?;
    Ok(RenewalPair {
        bin_width,
        k,
        rate,
        empirical,
        convolution,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub pair: RenewalPair,
    pub curves: DifferenceCurves,
    pub result: CharacterizationResult,
}

impl Analysis {
    pub fn summary(&self, events: usize) -> Summary {
        Summary {
            m: events,
            rate: self.pair.rate,
            k: self.pair.k,
            delta: self.pair.bin_width,
            e_max_norm: self.result.e_max_norm,
            position_tweets: self.result.position_tweets,
            zone: self.result.zone,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub m: usize,
    pub rate: f64,
    pub k: usize,
    pub delta: f64,
    pub e_max_norm: f64,
    pub position_tweets: f64,
    pub zone: crate::characterization::Zone,
}

pub fn analyze(
    a: &InterArrivals,
    cfg: &EstimationConfig,
    thresholds: ZoneThresholds,
) -> Result<Analysis> {
    let pair = estimate_pair(a, cfg)?;
    let curves = difference(&pair.empirical, &pair.convolution)?;
    let result = characterize(&curves, pair.k, pair.rate, thresholds)?;
    Ok(Analysis {
        pair,
        curves,
        result,
    })
}

/// Empirical estimate followed by periodic-event detection.
pub fn detect_periodic(
    a: &InterArrivals,
    cfg: &EstimationConfig,
    detection: &DetectionConfig,
) -> Result<(RenewalDensityEstimate, DetectionReport)> {
    let r = estimate_empirical(a, cfg)?;
    let report = detect(&r, detection)?;
    Ok((r, report))
}
