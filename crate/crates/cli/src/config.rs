//! Run configuration: command-line flags layered over an optional TOML file.

use std::path::Path;

use anyhow::{Context, Result};
use renewal_core::{DetectionConfig, EstimationConfig, GroupSize, ZoneThresholds};
use serde::Deserialize;

pub const SEED_ENV: &str = "RS_SEED";

/// Keys accepted in the `--config` file. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<usize>,
    pub delta: Option<f64>,
    pub n_sub: Option<usize>,
    pub half_window: Option<usize>,
    pub trim: Option<f64>,
    pub p_fa: Option<f64>,
    pub seed: Option<u64>,
    pub thresholds: Option<[f64; 2]>,
    pub exclude_origin_bin: Option<bool>,
    pub downsample: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub estimation: EstimationConfig,
    pub detection: DetectionConfig,
    pub thresholds: ZoneThresholds,
    pub seed: u64,
    pub downsample: Option<GroupSize>,
}

/// Values given on the command line; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct FlagConfig {
    pub k: Option<usize>,
    pub delta: Option<f64>,
    pub n_sub: Option<usize>,
    pub half_window: Option<usize>,
    pub trim: Option<f64>,
    pub p_fa: Option<f64>,
    pub seed: Option<u64>,
    pub thresholds: Option<ZoneThresholds>,
    pub exclude_origin_bin: bool,
    pub downsample: Option<GroupSize>,
}

impl RunConfig {
    pub fn resolve(flags: &FlagConfig, file: &FileConfig, env_seed: Option<String>) -> Result<Self> {
        let estimation = EstimationConfig {
            k: flags.k.or(file.k),
            bin_width: flags.delta.or(file.delta),
            ..Default::default()
        };
        if let Some(w) = estimation.bin_width {
            anyhow::ensure!(w > 0.0 && w.is_finite(), "--delta must be positive, got {w}");
        }
        if estimation.k == Some(0) {
            anyhow::bail!("--k must be >= 1");
        }

        let mut detection = DetectionConfig::default();
        if let Some(n) = flags.n_sub.or(file.n_sub) {
            detection.n_sub = n;
        }
        detection.half_window = flags.half_window.or(file.half_window);
        if let Some(t) = flags.trim.or(file.trim) {
            detection.trim_fraction = t;
        }
        if let Some(p) = flags.p_fa.or(file.p_fa) {
            detection.p_fa = p;
        }
        detection.exclude_origin_bin =
            flags.exclude_origin_bin || file.exclude_origin_bin.unwrap_or(false);
        detection.validate()?;

        let thresholds = match (flags.thresholds, file.thresholds) {
            (Some(t), _) => t,
            (None, Some([lo, hi])) => ZoneThresholds::new(lo, hi)?,
            (None, None) => ZoneThresholds::default(),
        };

        let env_seed = match env_seed {
            Some(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .with_context(|| format!("{SEED_ENV}={s:?} is not an unsigned integer"))?,
            ),
            None => None,
        };
        let seed = flags.seed.or(file.seed).or(env_seed).unwrap_or(0);

        let downsample = match (flags.downsample, file.downsample.as_deref()) {
            (Some(g), _) => Some(g),
            (None, Some(s)) => Some(s.parse()?),
            (None, None) => None,
        };

        Ok(Self {
            estimation,
            detection,
            thresholds,
            seed,
            downsample,
        })
    }
}
