//! Seeded synthetic event streams with known structure.
//!
//! Generators work in continuous time and round every event time to the
//! nearest second at the end, so same-second arrivals (zero gaps) show up the
//! way they do in one-second-resolution logs.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Geometric, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventStream;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn round_times(times: impl IntoIterator<Item = f64>) -> Vec<i64> {
    times.into_iter().map(|t| t.round() as i64).collect()
}

/// Distribution of iid gaps for a renewal stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum GapDistribution {
    Exponential { mean: f64 },
    Gamma { shape: f64, mean: f64 },
    Uniform { min: f64, max: f64 },
}

impl GapDistribution {
    pub fn mean(&self) -> f64 {
        match *self {
            GapDistribution::Exponential { mean } | GapDistribution::Gamma { mean, .. } => mean,
            GapDistribution::Uniform { min, max } => 0.5 * (min + max),
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        match *self {
            GapDistribution::Exponential { mean } => {
                positive("mean gap", mean)?;
                let d = Exp::new(1.0 / mean).map_err(|e| invalid(e.to_string()))?;
                Ok(Box::new(move |r| d.sample(r)))
            }
            GapDistribution::Gamma { shape, mean } => {
                positive("gamma shape", shape)?;
                positive("mean gap", mean)?;
                let d = Gamma::new(shape, mean / shape).map_err(|e| invalid(e.to_string()))?;
                Ok(Box::new(move |r| d.sample(r)))
            }
            GapDistribution::Uniform { min, max } => {
                if !(min >= 0.0 && max > min && max.is_finite()) {
                    return Err(invalid(format!("uniform gaps need 0 <= min < max, got {min}..{max}")));
                }
                let d = Uniform::new(min, max).map_err(|e| invalid(e.to_string()))?;
                Ok(Box::new(move |r| d.sample(r)))
            }
        }
    }
}

type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> f64>;

/// Continuous-time gaps of a renewal stream before any rounding; `m - 1`
/// values for `m` events.
pub fn renewal_gaps(gap: GapDistribution, m: usize, seed: u64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(invalid(format!("need at least 2 events, got {m}")));
    }
    let sample = gap.sampler()?;
    let mut rng = rng_for(seed, 0);
    Ok((1..m).map(|_| sample(&mut rng)).collect())
}

/// Renewal stream starting at t = 0 with iid gaps, times rounded to seconds.
pub fn gen_renewal(gap: GapDistribution, m: usize, seed: u64) -> Result<EventStream> {
    let gaps = renewal_gaps(gap, m, seed)?;
    let mut t = 0.0;
    let times = std::iter::once(0.0).chain(gaps.into_iter().map(|g| {
        t += g;
        t
    }));
    EventStream::from_times(round_times(times))
}

/// Poisson stream with mean gap `mean_gap` seconds.
pub fn gen_poisson(mean_gap: f64, m: usize, seed: u64) -> Result<EventStream> {
    gen_renewal(GapDistribution::Exponential { mean: mean_gap }, m, seed)
}

/// Burst process: Poisson-timed triggers, each opening a run of a geometric
/// number of events separated by short exponential gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Mean time between burst triggers, seconds.
    pub trigger_mean: f64,
    /// Mean events per burst (geometric on 1, 2, …).
    pub mean_burst_size: f64,
    /// Mean gap between events inside a burst, seconds.
    pub intra_gap_mean: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            trigger_mean: 30.0,
            mean_burst_size: 3.0,
            intra_gap_mean: 2.0,
        }
    }
}

impl ClusterParams {
    /// Long-run events per second.
    pub fn rate(&self) -> f64 {
        self.mean_burst_size / self.trigger_mean
    }

    pub fn validate(&self) -> Result<()> {
        positive("trigger mean", self.trigger_mean)?;
        positive("intra-burst gap mean", self.intra_gap_mean)?;
        if !(self.mean_burst_size >= 1.0 && self.mean_burst_size.is_finite()) {
            return Err(invalid(format!(
                "mean burst size must be >= 1, got {}",
                self.mean_burst_size
            )));
        }
        Ok(())
    }
}

pub fn gen_cluster(params: ClusterParams, m: usize, seed: u64) -> Result<EventStream> {
    params.validate()?;
    if m < 2 {
        return Err(invalid(format!("need at least 2 events, got {m}")));
    }
    let trigger = Exp::new(1.0 / params.trigger_mean).map_err(|e| invalid(e.to_string()))?;
    let intra = Exp::new(1.0 / params.intra_gap_mean).map_err(|e| invalid(e.to_string()))?;
    let extra = Geometric::new(1.0 / params.mean_burst_size).map_err(|e| invalid(e.to_string()))?;
    let mut rng = rng_for(seed, 0);

    let mut times = Vec::with_capacity(m + 64);
    let mut start = 0.0;
    while times.len() < m {
        let size = 1 + extra.sample(&mut rng) as usize;
        let mut t = start;
        for i in 0..size {
            if i > 0 {
                t += intra.sample(&mut rng);
            }
            times.push(t);
        }
        start += trigger.sample(&mut rng);
    }
    times.sort_by(f64::total_cmp);
    times.truncate(m);
    EventStream::from_times(round_times(times))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Background,
    Injected,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Background => "background",
            Label::Injected => "injected",
        })
    }
}

/// Event times with a ground-truth label per event, both sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub times: Vec<i64>,
    pub labels: Vec<Label>,
}

impl LabeledStream {
    pub fn background(stream: &EventStream) -> Self {
        Self {
            times: stream.times().to_vec(),
            labels: vec![Label::Background; stream.len()],
        }
    }

    pub fn stream(&self) -> Result<EventStream> {
        EventStream::from_times(self.times.clone())
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// `time,label` sidecar rows.
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("time,label\n");
        for (t, l) in self.times.iter().zip(&self.labels) {
            let _ = writeln!(out, "{t},{l}");
        }
        out
    }
}

/// How many periodic events to add.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectAmount {
    Count(usize),
    /// Share of the merged stream that is injected.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOverlay {
    /// Seconds between consecutive events of one train.
    pub period: f64,
    /// Each event is displaced uniformly within `±jitter` seconds.
    #[serde(default)]
    pub jitter: f64,
    pub amount: InjectAmount,
}

impl PeriodicOverlay {
    fn validate(&self) -> Result<()> {
        positive("period", self.period)?;
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(invalid(format!("jitter must be >= 0, got {}", self.jitter)));
        }
        if let InjectAmount::Fraction(f) = self.amount {
            if !(0.0..1.0).contains(&f) {
                return Err(invalid(format!("injected fraction must lie in [0, 1), got {f}")));
            }
        }
        Ok(())
    }

    fn count(&self, base_len: usize) -> usize {
        match self.amount {
            InjectAmount::Count(n) => n,
            InjectAmount::Fraction(f) => (f * base_len as f64 / (1.0 - f)).round() as usize,
        }
    }
}

/// Merges periodic trains into `base`. A train covers the base span once;
/// when more events are requested than one train holds, further trains with
/// independent random phases are added. With an empty base a single train
/// starts at t = 0.
pub fn inject_periodic(base: &[i64], overlay: PeriodicOverlay, seed: u64) -> Result<LabeledStream> {
    overlay.validate()?;
    let count = overlay.count(base.len());
    let mut merged: Vec<(i64, Label)> = base.iter().map(|&t| (t, Label::Background)).collect();
    merged.sort_by_key(|&(t, _)| t);
    if count > 0 {
        let mut rng = rng_for(seed, 1);
        let (first, span) = match (merged.first(), merged.last()) {
            (Some(&(a, _)), Some(&(b, _))) => (a as f64, (b - a) as f64),
            _ => (0.0, f64::INFINITY),
        };
        let per_train = if span.is_finite() {
            (span / overlay.period).floor() as usize + 1
        } else {
            count
        };
        let mut remaining = count;
        let mut injected = Vec::with_capacity(count);
        while remaining > 0 {
            let phase = if base.is_empty() {
                0.0
            } else {
                rng.random_range(0.0..overlay.period)
            };
            let n = remaining.min(per_train);
            for i in 0..n {
                let jitter = if overlay.jitter > 0.0 {
                    rng.random_range(-overlay.jitter..=overlay.jitter)
                } else {
                    0.0
                };
                let t = first + phase + i as f64 * overlay.period + jitter;
                injected.push((t.round() as i64, Label::Injected));
            }
            remaining -= n;
        }
        merged.extend(injected);
        // stable: background precedes injected within the same second
        merged.sort_by_key(|&(t, _)| t);
    }
    let (times, labels) = merged.into_iter().unzip();
    Ok(LabeledStream { times, labels })
}

/// Base process for [`GeneratorSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseProcess {
    Poisson { mean_gap: f64 },
    Renewal { gap: GapDistribution },
    Cluster(ClusterParams),
}

/// Everything needed to reproduce a synthetic stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub base: BaseProcess,
    pub m: usize,
    pub seed: u64,
    #[serde(default)]
    pub overlay: Option<PeriodicOverlay>,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<LabeledStream> {
        let base = match self.base {
            BaseProcess::Poisson { mean_gap } => gen_poisson(mean_gap, self.m, self.seed)?,
            BaseProcess::Renewal { gap } => gen_renewal(gap, self.m, self.seed)?,
            BaseProcess::Cluster(p) => gen_cluster(p, self.m, self.seed)?,
        };
        match self.overlay {
            Some(overlay) => inject_periodic(base.times(), overlay, self.seed),
            None => Ok(LabeledStream::background(&base)),
        }
    }
}
