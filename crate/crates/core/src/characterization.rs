//! Memory in the inter-arrival sequence, measured as the gap between the
//! empirical and the convolution (memoryless) renewal densities.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::RenewalDensityEstimate;

/// Default zone thresholds on `max(E)/k`, calibrated on the synthetic suite
/// (iid, mildly and strongly clustered generators).
pub const DEFAULT_THRESHOLDS: ZoneThresholds = ZoneThresholds {
    low: 0.0015,
    high: 0.006,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Low,
    Middle,
    High,
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Zone::Low => "low",
            Zone::Middle => "middle",
            Zone::High => "high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for ZoneThresholds {
    fn default() -> Self {
        DEFAULT_THRESHOLDS
    }
}

impl ZoneThresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let t = Self { low, high };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low >= 0.0 && self.low < self.high) {
            return Err(Error::InvalidConfig(format!(
                "zone thresholds need 0 <= low < high, got {},{}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for ZoneThresholds {
    type Err = Error;

    /// `low,high`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("expected LOW,HIGH thresholds, got {s:?}"));
        let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
        ZoneThresholds::new(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// `e(t) = r̃(t) − r̃′(t)` and its running sum `E(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceCurves {
    pub bin_width: f64,
    pub e: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl DifferenceCurves {
    pub fn from_difference(bin_width: f64, e: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = e
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        Self {
            bin_width,
            e,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,e,E\n");
        for (i, (e, c)) in self.e.iter().zip(&self.cumulative).enumerate() {
            let _ = writeln!(out, "{},{},{}", i as f64 * self.bin_width, e, c);
        }
        out
    }
}

/// Compares the two estimates on the leading bins where both are complete.
pub fn difference(
    empirical: &RenewalDensityEstimate,
    convolution: &RenewalDensityEstimate,
) -> Result<DifferenceCurves> {
    let (a, b) = (empirical.bin_width, convolution.bin_width);
    if !(a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())) {
        return Err(Error::GridMismatch { left: a, right: b });
    }
    let left = empirical.complete_values();
    let right = convolution.complete_values();
    let n = left.len().min(right.len());
    if n == 0 {
        return Err(Error::InsufficientOverlap);
    }
    let e = left[..n].iter().zip(&right[..n]).map(|(x, y)| x - y).collect();
    Ok(DifferenceCurves::from_difference(a, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationResult {
    /// `max(E) / k`.
    pub e_max_norm: f64,
    /// Location of the maximum in seconds times the stream rate, i.e. in
    /// events.
    pub position_tweets: f64,
    pub zone: Zone,
}

impl CharacterizationResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

pub fn classify_zone(e_max_norm: f64, thresholds: ZoneThresholds) -> Result<Zone> {
    thresholds.validate()?;
    Ok(if e_max_norm < thresholds.low {
        Zone::Low
    } else if e_max_norm < thresholds.high {
        Zone::Middle
    } else {
        Zone::High
    })
}

pub fn characterize(
    d: &DifferenceCurves,
    k: usize,
    source_rate: f64,
    thresholds: ZoneThresholds,
) -> Result<CharacterizationResult> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if !(source_rate > 0.0 && source_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "source rate must be positive, got {source_rate}"
        )));
    }
    if d.is_empty() {
        return Err(Error::InsufficientOverlap);
    }
    // earliest index wins on a plateau
    let (argmax, max) = d
        .cumulative
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let e_max_norm = max / k as f64;
    let zone = if max <= 0.0 {
        thresholds.validate()?;
        Zone::Low
    } else {
        classify_zone(e_max_norm, thresholds)?
    };
    Ok(CharacterizationResult {
        e_max_norm,
        position_tweets: argmax as f64 * d.bin_width * source_rate,
        zone,
    })
}
