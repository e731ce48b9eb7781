//! Uniform-bin histograms and bin-width selection by minimizing the
//! Shimazaki–Shinomoto cost `C(Δ) = (2·mean − var) / Δ²` of the bin counts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Half-open bins `[origin + i·Δ, origin + (i+1)·Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub origin: f64,
    pub counts: Vec<u64>,
    /// Samples at or beyond the end of the range.
    pub overflow: u64,
}

impl Histogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        bins_to_csv(self.origin, self.bin_width, self.counts.iter().map(|&c| c as f64))
    }
}

/// Probability mass per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub bin_width: f64,
    pub origin: f64,
    pub values: Vec<f64>,
}

impl Density {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        bins_to_csv(self.origin, self.bin_width, self.values.iter().copied())
    }
}

pub(crate) fn bins_to_csv(origin: f64, width: f64, values: impl Iterator<Item = f64>) -> String {
    let mut out = String::from("bin_start,value\n");
    for (i, v) in values.enumerate() {
        let _ = writeln!(out, "{},{}", origin + i as f64 * width, v);
    }
    out
}

fn check_width(bin_width: f64) -> Result<()> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    Ok(())
}

/// Bin index of a sample for bins anchored at zero.
#[inline]
pub(crate) fn bin_of(x: f64, bin_width: f64) -> usize {
    (x / bin_width).floor() as usize
}

/// Histogram of `samples` on `[0, t_max)`; samples at or beyond `t_max` go to
/// the overflow tally.
pub fn build_histogram(samples: &[f64], bin_width: f64, t_max: f64) -> Result<Histogram> {
    check_width(bin_width)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "histogram range end must be positive, got {t_max}"
        )));
    }
    let n_bins = (t_max / bin_width).ceil() as usize;
    fill(samples, bin_width, n_bins, t_max)
}

fn fill(samples: &[f64], bin_width: f64, n_bins: usize, t_max: f64) -> Result<Histogram> {
    let mut counts = vec![0u64; n_bins];
    let mut overflow = 0;
    for &x in samples {
        if !(x >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "histogram samples must be non-negative, got {x}"
            )));
        }
        let idx = bin_of(x, bin_width);
        if x >= t_max || idx >= n_bins {
            overflow += 1;
        } else {
            counts[idx] += 1;
        }
    }
    Ok(Histogram {
        bin_width,
        origin: 0.0,
        counts,
        overflow,
    })
}

/// `(2·k̄ − v) / Δ²` with `k̄` the mean bin count and `v` the biased (1/N)
/// variance of the counts.
pub fn shimazaki_cost(h: &Histogram) -> f64 {
    let n = h.counts.len() as f64;
    let mean = h.counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = h
        .counts
        .iter()
        .map(|&c| {
            let d = mean - c as f64;
            d * d
        })
        .sum::<f64>()
        / n;
    (2.0 * mean - var) / (h.bin_width * h.bin_width)
}

/// Histogram spanning every sample: bins `0..=floor(max/Δ)`.
pub fn covering_histogram(samples: &[f64], bin_width: f64) -> Result<Histogram> {
    check_width(bin_width)?;
    let max = samples.iter().copied().fold(0.0, f64::max);
    let n_bins = bin_of(max, bin_width) + 1;
    fill(samples, bin_width, n_bins, f64::INFINITY)
}

/// Cost of every candidate width, evaluated on histograms that cover all
/// samples. Output order follows `grid`.
pub fn cost_curve(samples: &[f64], grid: &[f64], exec: Execution) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("bin-width grid is empty".into()));
    }
    for &w in grid {
        check_width(w)?;
    }
    exec.map(grid, |&w| covering_histogram(samples, w).map(|h| shimazaki_cost(&h)))
        .into_iter()
        .collect()
}

/// The grid width with the smallest cost; ties go to the smaller width.
pub fn optimal_bin_width(samples: &[f64], grid: &[f64], exec: Execution) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "bin-width selection needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let costs = cost_curve(samples, grid, exec)?;
    let mut best = (grid[0], costs[0]);
    for (&w, &c) in grid.iter().zip(&costs).skip(1) {
        if c < best.1 || (c == best.1 && w < best.0) {
            best = (w, c);
        }
    }
    Ok(best.0)
}

/// `count` logarithmically spaced widths from `lo` to `hi`. With `integer`,
/// widths are rounded to whole seconds (minimum 1) and deduplicated, which
/// keeps every bin covering the same number of one-second timestamps.
pub fn log_grid(lo: f64, hi: f64, count: usize, integer: bool) -> Vec<f64> {
    let hi = hi.max(lo);
    let count = count.max(1);
    let mut grid: Vec<f64> = (0..count)
        .map(|i| {
            if count == 1 {
                lo
            } else {
                lo * (hi / lo).powf(i as f64 / (count - 1) as f64)
            }
        })
        .collect();
    if integer {
        grid.iter_mut().for_each(|w| *w = w.round().max(1.0));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Default candidate widths: 50 log-spaced values between 1 s and `t_max/20`.
pub fn default_grid(t_max: f64) -> Vec<f64> {
    log_grid(1.0, t_max / 20.0, 50, true)
}

/// Divides counts by their total.
pub fn normalize(h: &Histogram) -> Result<Density> {
    let total = h.total();
    if total == 0 {
        return Err(Error::EmptyDensity);
    }
    let total = total as f64;
    Ok(Density {
        bin_width: h.bin_width,
        origin: h.origin,
        values: h.counts.iter().map(|&c| c as f64 / total).collect(),
    })
}
