//! Renewal-density estimators.
//!
//! Two routes to `r(t) = Σₙ f_{Sₙ}(t)`, both truncated at a maximum order `k`
//! and expressed per second (each order's mass divided by the bin width):
//!
//! * **empirical**: slide a window of `k` inter-arrivals over the sequence and
//!   histogram the partial sums `S_j` of every order `j` separately, then add
//!   the normalized histograms. Captures whatever dependence the data has.
//! * **convolution**: histogram only the first-order gaps and build higher
//!   orders by repeated discrete convolution, i.e. the renewal density the
//!   stream would have if its gaps were independent.
//!
//! Each estimate also records `complete_bins`, the number of leading bins that
//! lie below the 1% quantile of the order-`k` partial sum. Past that point the
//! truncated sum is missing arrivals of order > k and the estimate rolls off.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::histogram::{bin_of, build_histogram, normalize, Density};
use crate::ingest::InterArrivals;

/// Quantile of the highest-order partial sum that bounds the complete region.
pub const COMPLETE_QUANTILE: f64 = 0.01;
/// Quantile of the highest-order partial sum that sets the empirical grid end.
pub const GRID_QUANTILE: f64 = 0.99;
/// Convolution grid end in units of `k × mean gap`.
pub const CONVOLUTION_SPAN: f64 = 1.5;

const ORDER_CHUNK: usize = 16;
const BIN_CHUNK: usize = 512;

/// Sliding-window partial sums grouped by order.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumTable {
    k: usize,
    /// `sums[j - 1][i]` is `S_j^i`, the sum of `j` gaps starting at gap `i`.
    sums: Vec<Vec<u64>>,
    mean_gap: f64,
}

impl PartialSumTable {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Realizations of order `j` (1-based).
    pub fn order(&self, j: usize) -> &[u64] {
        &self.sums[j - 1]
    }

    /// Number of windows, identical for every order.
    pub fn windows(&self) -> usize {
        self.sums[0].len()
    }

    /// Mean of all gaps the table was built from.
    pub fn mean_gap(&self) -> f64 {
        self.mean_gap
    }
}

fn check_order(k: usize, m: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidConfig("maximum order k must be >= 1".into()));
    }
    if k >= m {
        return Err(Error::InsufficientData(format!(
            "maximum order {k} leaves no windows over {m} inter-arrivals (need k < m)"
        )));
    }
    Ok(())
}

fn prefix_sums(values: &[u64]) -> Vec<u64> {
    let mut prefix = Vec::with_capacity(values.len() + 1);
    let mut acc = 0u64;
    prefix.push(0);
    for &v in values {
        acc += v;
        prefix.push(acc);
    }
    prefix
}

/// Windows start at gaps `0..m-k`; each yields `S_1 … S_k` cumulatively.
pub fn partial_sums(a: &InterArrivals, k: usize) -> Result<PartialSumTable> {
    let m = a.len();
    check_order(k, m)?;
    let values = a.values();
    let n = m - k;
    let mut sums = vec![Vec::with_capacity(n); k];
    for i in 0..n {
        let mut s = 0;
        for (j, order) in sums.iter_mut().enumerate() {
            s += values[i + j];
            order.push(s);
        }
    }
    Ok(PartialSumTable {
        k,
        sums,
        mean_gap: a.mean(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Empirical,
    Convolution,
}

impl std::fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateKind::Empirical => "empirical",
            EstimateKind::Convolution => "convolution",
        })
    }
}

/// Binned renewal density in events per second on `[0, values.len()·Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalDensityEstimate {
    pub kind: EstimateKind,
    #[serde(rename = "delta")]
    pub bin_width: f64,
    pub k: usize,
    #[serde(rename = "rate")]
    pub source_rate: f64,
    pub values: Vec<f64>,
    pub complete_bins: usize,
}

impl RenewalDensityEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.values.len() as f64 * self.bin_width
    }

    /// The leading bins where every order up to `k` is fully represented.
    pub fn complete_values(&self) -> &[f64] {
        &self.values[..self.complete_bins.min(self.values.len())]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i as f64 * self.bin_width, v);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// `(q01, q99)` of the highest-order partial sums.
fn top_order_quantiles(mut top: Vec<u64>) -> (u64, u64) {
    top.sort_unstable();
    (
        nearest_rank(&top, COMPLETE_QUANTILE),
        nearest_rank(&top, GRID_QUANTILE),
    )
}

fn check_width(bin_width: f64) -> Result<()> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    Ok(())
}

/// Grid for the empirical estimate: explicit `t_max`, or just past the 99th
/// percentile of the top-order sums.
fn empirical_grid(bin_width: f64, t_max: Option<f64>, q99: u64) -> Result<(usize, f64)> {
    match t_max {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(Error::InvalidConfig(format!(
            "grid end must be positive, got {t}"
        ))),
        Some(t) => Ok(((t / bin_width).ceil() as usize, t)),
        None => {
            let n = bin_of(q99 as f64, bin_width) + 1;
            Ok((n, n as f64 * bin_width))
        }
    }
}

/// Sums the per-order normalized histograms. `order(j, buf)` must push the
/// realizations of order `j` into `buf`. Orders are reduced in fixed-size
/// chunks so the floating-point summation order never depends on threads.
fn accumulate_orders<F>(
    k: usize,
    n_bins: usize,
    t_max: f64,
    bin_width: f64,
    exec: Execution,
    order: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, &mut Vec<u64>) + Sync + Send,
{
    let n_chunks = k.div_ceil(ORDER_CHUNK);
    let partials = exec.map_range(n_chunks, |c| -> Result<Vec<f64>> {
        let mut acc = vec![0.0f64; n_bins];
        let mut counts = vec![0u32; n_bins];
        let mut buf = Vec::new();
        let first = c * ORDER_CHUNK + 1;
        let last = ((c + 1) * ORDER_CHUNK).min(k);
        for j in first..=last {
            buf.clear();
            order(j, &mut buf);
            counts.iter_mut().for_each(|x| *x = 0);
            let mut in_range = 0u64;
            for &s in &buf {
                let x = s as f64;
                if x < t_max {
                    let b = bin_of(x, bin_width);
                    if b < n_bins {
                        counts[b] += 1;
                        in_range += 1;
                    }
                }
            }
            if in_range == 0 {
                return Err(Error::InsufficientData(format!(
                    "order {j} has no partial sums inside the grid"
                )));
            }
            let inv = 1.0 / in_range as f64;
            for (a, &cnt) in acc.iter_mut().zip(&counts) {
                if cnt != 0 {
                    *a += cnt as f64 * inv;
                }
            }
        }
        Ok(acc)
    });
    let mut total = vec![0.0f64; n_bins];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            *t += p;
        }
    }
    let inv_width = 1.0 / bin_width;
    total.iter_mut().for_each(|v| *v *= inv_width);
    Ok(total)
}

fn rate_from_mean_gap(mean_gap: f64) -> f64 {
    if mean_gap > 0.0 {
        1.0 / mean_gap
    } else {
        0.0
    }
}

/// Empirical renewal density from a materialized partial-sum table.
pub fn empirical_rd(
    table: &PartialSumTable,
    bin_width: f64,
    t_max: Option<f64>,
    exec: Execution,
) -> Result<RenewalDensityEstimate> {
    check_width(bin_width)?;
    let k = table.k();
    let (q01, q99) = top_order_quantiles(table.order(k).to_vec());
    let (n_bins, t_end) = empirical_grid(bin_width, t_max, q99)?;
    let values = accumulate_orders(k, n_bins, t_end, bin_width, exec, |j, buf| {
        buf.extend_from_slice(table.order(j))
    })?;
    Ok(RenewalDensityEstimate {
        kind: EstimateKind::Empirical,
        bin_width,
        k,
        source_rate: rate_from_mean_gap(table.mean_gap()),
        complete_bins: bin_of(q01 as f64, bin_width).min(n_bins),
        values,
    })
}

/// Same estimate as [`empirical_rd`] without materializing the `k × (m-k)`
/// table: order-`j` sums are read off prefix sums.
pub fn empirical_rd_from_gaps(
    a: &InterArrivals,
    k: usize,
    bin_width: f64,
    t_max: Option<f64>,
    exec: Execution,
) -> Result<RenewalDensityEstimate> {
    check_width(bin_width)?;
    let m = a.len();
    check_order(k, m)?;
    let n = m - k;
    let prefix = prefix_sums(a.values());
    let top: Vec<u64> = (0..n).map(|i| prefix[i + k] - prefix[i]).collect();
    let (q01, q99) = top_order_quantiles(top);
    let (n_bins, t_end) = empirical_grid(bin_width, t_max, q99)?;
    let values = accumulate_orders(k, n_bins, t_end, bin_width, exec, |j, buf| {
        buf.extend(prefix[j..j + n].iter().zip(&prefix[..n]).map(|(hi, lo)| hi - lo))
    })?;
    Ok(RenewalDensityEstimate {
        kind: EstimateKind::Empirical,
        bin_width,
        k,
        source_rate: rate_from_mean_gap(a.mean()),
        complete_bins: bin_of(q01 as f64, bin_width).min(n_bins),
        values,
    })
}

/// Normalized histogram of the raw gaps on `[0, t_max)`.
pub fn first_order_pdf(a: &InterArrivals, bin_width: f64, t_max: f64) -> Result<Density> {
    let h = build_histogram(&a.as_f64(), bin_width, t_max)?;
    normalize(&h)
}

fn same_width(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Full discrete linear convolution of two mass sequences.
pub fn convolve(d1: &Density, d2: &Density) -> Result<Density> {
    if !same_width(d1.bin_width, d2.bin_width) {
        return Err(Error::GridMismatch {
            left: d1.bin_width,
            right: d2.bin_width,
        });
    }
    if d1.is_empty() || d2.is_empty() {
        return Err(Error::EmptyDensity);
    }
    let mut values = vec![0.0; d1.len() + d2.len() - 1];
    for (i, &x) in d1.values.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in d2.values.iter().enumerate() {
            values[i + j] += x * y;
        }
    }
    Ok(Density {
        bin_width: d1.bin_width,
        origin: d1.origin + d2.origin,
        values,
    })
}

/// `out[i] = Σ_j kernel[j]·prev[i-j]` for `i < out.len()`, skipping zero
/// kernel entries. Each output bin sums in ascending `j`.
fn truncated_step(prev: &[f64], kernel: &[(usize, f64)], out: &mut [f64], exec: Execution) {
    exec.fill_chunks(out, BIN_CHUNK, |start, chunk| {
        for (off, slot) in chunk.iter_mut().enumerate() {
            let i = start + off;
            let mut acc = 0.0;
            for &(j, w) in kernel {
                if j > i {
                    break;
                }
                acc += w * prev[i - j];
            }
            *slot = acc;
        }
    });
}

/// Convolution renewal density `Σ_{n=1..k} f1^{*n} / Δ` on the grid of `f1`.
///
/// Every term is truncated to the grid before the next convolution; because
/// all terms start at bin 0 this does not change any in-grid value.
pub fn convolution_rd(
    f1: &Density,
    k: usize,
    source_rate: f64,
    exec: Execution,
) -> Result<RenewalDensityEstimate> {
    if k < 1 {
        return Err(Error::InvalidConfig("maximum order k must be >= 1".into()));
    }
    check_width(f1.bin_width)?;
    if f1.is_empty() || f1.mass() <= 0.0 {
        return Err(Error::EmptyDensity);
    }
    let n_bins = f1.len();
    let kernel: Vec<(usize, f64)> = f1
        .values
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .collect();

    let mut term = f1.values.clone();
    let mut total = term.clone();
    let mut next = vec![0.0; n_bins];
    for _ in 2..=k {
        truncated_step(&term, &kernel, &mut next, exec);
        std::mem::swap(&mut term, &mut next);
        for (t, &v) in total.iter_mut().zip(&term) {
            *t += v;
        }
    }

    // `term` now holds f1^{*k}
    let mut cdf = 0.0;
    let mut complete_bins = n_bins;
    for (i, &v) in term.iter().enumerate() {
        cdf += v;
        if cdf >= COMPLETE_QUANTILE {
            complete_bins = i;
            break;
        }
    }

    let inv_width = 1.0 / f1.bin_width;
    total.iter_mut().for_each(|v| *v *= inv_width);
    Ok(RenewalDensityEstimate {
        kind: EstimateKind::Convolution,
        bin_width: f1.bin_width,
        k,
        source_rate,
        values: total,
        complete_bins,
    })
}

/// Default convolution grid end: `1.5 × k × mean gap`.
pub fn convolution_t_max(k: usize, mean_gap: f64) -> f64 {
    CONVOLUTION_SPAN * k as f64 * mean_gap
}

/// `min(1000, ⌊m/10⌋)`, at least 1.
pub fn default_max_order(n_gaps: usize) -> usize {
    (n_gaps / 10).clamp(1, 1000)
}
