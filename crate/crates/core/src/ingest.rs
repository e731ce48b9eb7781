//! Event-log ingestion: timestamps at one-second resolution, inter-arrival
//! sequences and random-group downsampling.

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATETIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Absolute event times in whole seconds, sorted ascending. Ties are kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStream {
    times: Vec<i64>,
}

impl EventStream {
    pub fn from_times(mut times: Vec<i64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyStream);
        }
        times.sort_unstable();
        Ok(Self { times })
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Seconds between the first and last event.
    pub fn span(&self) -> i64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Events per second, `(m - 1) / span`. `None` for a single event or a
    /// stream that occupies one second.
    pub fn rate(&self) -> Option<f64> {
        let span = self.span();
        (self.len() >= 2 && span > 0).then(|| (self.len() - 1) as f64 / span as f64)
    }

    /// One epoch-seconds value per line, newline-terminated.
    pub fn to_log_string(&self) -> String {
        let mut out = String::with_capacity(self.times.len() * 11);
        for t in &self.times {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }
}

fn parse_line(line: &str, number: usize) -> Result<i64> {
    let err = |message: String| Error::Parse {
        line: number,
        message,
    };
    let digits = line.strip_prefix('-').unwrap_or(line);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        return line
            .parse::<i64>()
            .map_err(|e| err(format!("bad epoch value {line:?}: {e}")));
    }
    if let Some((whole, _)) = line.split_once('.') {
        let whole_digits = whole.strip_prefix('-').unwrap_or(whole);
        let is_number = !whole_digits.is_empty() && whole_digits.bytes().all(|b| b.is_ascii_digit());
        if is_number || NaiveDateTime::parse_from_str(whole, DATETIME_FORMAT).is_ok() {
            return Err(err(format!(
                "sub-second timestamp {line:?} (only whole seconds are accepted)"
            )));
        }
    }
    NaiveDateTime::parse_from_str(line, DATETIME_FORMAT)
        .map(|dt| dt.and_utc().timestamp())
        .map_err(|_| {
            err(format!(
                "expected epoch seconds or YYYY-MM-DDTHH:MM:SS, found {line:?}"
            ))
        })
}

/// Parses a line-oriented log: one timestamp per line, `#` comments and blank
/// lines ignored. The result is sorted regardless of input order.
pub fn parse_stream(text: &str) -> Result<EventStream> {
    let mut times = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        times.push(parse_line(line, idx + 1)?);
    }
    EventStream::from_times(times)
}

/// Non-negative gaps between consecutive events, in seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterArrivals {
    values: Vec<u64>,
}

impl InterArrivals {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData(
                "inter-arrival sequence is empty".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.total() as f64 / self.values.len() as f64
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

pub fn inter_arrivals(stream: &EventStream) -> Result<InterArrivals> {
    if stream.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 events to form inter-arrivals, got {}",
            stream.len()
        )));
    }
    let values = stream
        .times()
        .windows(2)
        .map(|w| (w[1] - w[0]) as u64)
        .collect();
    Ok(InterArrivals { values })
}

/// Inclusive range of group sizes for [`downsample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSize {
    pub min: usize,
    pub max: usize,
}

impl GroupSize {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        let g = Self { min, max };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.min < 1 {
            return Err(Error::InvalidConfig("group size minimum must be >= 1".into()));
        }
        if self.min > self.max {
            return Err(Error::InvalidConfig(format!(
                "group size range {}:{} is empty",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for GroupSize {
    type Err = Error;

    /// Accepts `min:max` or a single size.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("expected MIN:MAX group sizes, got {s:?}"));
        let (lo, hi) = s.split_once(':').unwrap_or((s, s));
        let min = lo.trim().parse().map_err(|_| bad())?;
        let max = hi.trim().parse().map_err(|_| bad())?;
        GroupSize::new(min, max)
    }
}

/// Replaces consecutive runs of inter-arrivals by their sum. Each run length
/// is drawn uniformly from `sizes`; a trailing partial run is summed too, so
/// the total elapsed time is preserved.
pub fn downsample(a: &InterArrivals, sizes: GroupSize, seed: u64) -> Result<InterArrivals> {
    sizes.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = a.values();
    let mut out = Vec::with_capacity(values.len() / sizes.min + 1);
    let mut pos = 0;
    while pos < values.len() {
        let g = rng.random_range(sizes.min..=sizes.max);
        let end = (pos + g).min(values.len());
        out.push(values[pos..end].iter().sum());
        pos = end;
    }
    InterArrivals::new(out)
}
